//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 42
//!
//! [[check]]
//! name = "gg_residual"
//! model = "sk"                  # sk | ea | rfim | pspin
//! N = [6, 10, 14]
//! points = [{ beta = 1.0, gamma = 0.5, h = 0.3 }]
//! samples = 256                 # disorder samples
//! draws = 512                   # replica tuples per disorder sample
//! n = 2
//! functional = "r12"
//! ```
//!
//! Every `(point, N)` pair of a `[[check]]` table is one cell.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checks::CheckKind;
use crate::error::{Error, Result};
use crate::model::{DisorderMode, ModelFamily, ModelSpec, Params};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Master seed for every check.
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(rename = "check", default)]
    pub checks: Vec<CheckConfig>,
}

/// One named check over a `(points x N)` matrix. Options a check does not use are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub name: String,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(rename = "N")]
    pub n_list: Vec<usize>,
    pub points: Vec<Params>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<DisorderMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thin: Option<usize>,
}

fn default_model() -> String {
    "sk".into()
}

impl CheckConfig {
    pub fn kind(&self) -> Result<CheckKind> {
        CheckKind::from_name(&self.name)
    }

    pub fn family(&self) -> Result<ModelFamily> {
        let rows = self.rows.unwrap_or(2);
        let periodic = self.periodic.unwrap_or(true);
        Ok(match self.model.as_str() {
            "sk" => ModelFamily::Sk,
            "ea" => ModelFamily::Ea { dims: self.dims.clone(), rows, periodic },
            "rfim" => ModelFamily::Rfim { dims: self.dims.clone(), rows, periodic, coupling: self.coupling.unwrap_or(1.0) },
            "pspin" => ModelFamily::Pspin {
                p: self.p.ok_or_else(|| Error::Config("pspin needs p".into()))?,
            },
            other => return Err(Error::Unknown { kind: "model", name: other.to_string() }),
        })
    }

    pub fn spec(&self, n: usize) -> Result<ModelSpec> {
        Ok(ModelSpec::new(self.family()?, n))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Resolves every check name and model, and rejects empty matrices.
    pub fn validate(&self) -> Result<()> {
        if self.checks.is_empty() {
            return Err(Error::Config("no [[check]] tables".into()));
        }
        for (i, c) in self.checks.iter().enumerate() {
            let kind = c.kind()?;
            c.family()?;
            if c.n_list.is_empty() || c.points.is_empty() {
                return Err(Error::Config(format!("check #{i} ({}) needs non-empty N and points", c.name)));
            }
            if c.n_list.contains(&0) {
                return Err(Error::Config(format!("check #{i} ({}): N must be positive", c.name)));
            }
            kind.validate(c).map_err(|e| Error::Config(format!("check #{i} ({}): {e}", c.name)))?;
        }
        Ok(())
    }

    fn digest(value: &Self) -> String {
        let canonical = serde_json::to_vec(value).expect("config serializes");
        hex::encode(Sha256::digest(canonical))
    }

    /// SHA-256 of the canonical JSON form of the parsed config, without
    /// `workers` and `output`, which do not change results.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        c.workers = None;
        Self::digest(&c)
    }

    /// Hash with every `N` list and the output directory cleared, so runs that
    /// differ only in system size can be merged into one convergence table.
    pub fn comparable_hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        c.workers = None;
        for check in &mut c.checks {
            check.n_list.clear();
        }
        Self::digest(&c)
    }
}
