use serde::{Deserialize, Serialize};

use super::builders;
use super::instance::{DisorderKey, ModelInstance};
use crate::error::{Error, Result};

/// A model family, independent of `N` and of the `(beta, gamma, h)` point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelFamily {
    Sk,
    /// Edwards-Anderson. The lattice is `dims` when given, otherwise `rows x (N / rows)`
    /// (a chain when `rows = 1`).
    Ea {
        #[serde(default)]
        dims: Option<Vec<usize>>,
        #[serde(default = "default_rows")]
        rows: usize,
        #[serde(default = "default_periodic")]
        periodic: bool,
    },
    Rfim {
        #[serde(default)]
        dims: Option<Vec<usize>>,
        #[serde(default = "default_rows")]
        rows: usize,
        #[serde(default = "default_periodic")]
        periodic: bool,
        #[serde(default = "default_coupling")]
        coupling: f64,
    },
    Pspin {
        p: usize,
    },
}

fn default_rows() -> usize {
    2
}
fn default_periodic() -> bool {
    true
}
fn default_coupling() -> f64 {
    1.0
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Sk => "sk",
            ModelFamily::Ea { .. } => "ea",
            ModelFamily::Rfim { .. } => "rfim",
            ModelFamily::Pspin { .. } => "pspin",
        }
    }

    pub fn ea() -> Self {
        ModelFamily::Ea { dims: None, rows: default_rows(), periodic: true }
    }
}

/// `(beta, gamma, h)`. Families that have no `beta` or `h` ignore them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(default)]
    pub beta: f64,
    pub gamma: f64,
    #[serde(default)]
    pub h: f64,
}

impl Params {
    pub fn new(beta: f64, gamma: f64, h: f64) -> Self {
        Self { beta, gamma, h }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }
}

/// Which disorder layer a quenched average resamples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DisorderMode {
    /// Base disorder fixed at base index 0; only `g_alpha` is resampled.
    Perturbation,
    /// Base and perturbation disorder both resampled.
    #[default]
    Total,
}

impl DisorderMode {
    pub fn key(self, master_seed: u64, sample_index: u64) -> DisorderKey {
        match self {
            DisorderMode::Perturbation => DisorderKey { master_seed, base_index: 0, perturbation_index: sample_index },
            DisorderMode::Total => DisorderKey::new(master_seed, sample_index),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DisorderMode::Perturbation => "perturbation",
            DisorderMode::Total => "total",
        }
    }
}

/// A family at a concrete size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub n: usize,
}

impl ModelSpec {
    pub fn new(family: ModelFamily, n: usize) -> Self {
        Self { family, n }
    }

    pub fn sk(n: usize) -> Self {
        Self::new(ModelFamily::Sk, n)
    }

    pub fn ea(n: usize) -> Self {
        Self::new(ModelFamily::ea(), n)
    }

    pub fn lattice_dims(&self) -> Result<Vec<usize>> {
        let (dims, rows) = match &self.family {
            ModelFamily::Ea { dims, rows, .. } | ModelFamily::Rfim { dims, rows, .. } => (dims, *rows),
            _ => return Err(Error::InvalidArgument(format!("{} has no lattice", self.family.name()))),
        };
        if let Some(dims) = dims {
            let product: usize = dims.iter().product();
            if product != self.n {
                return Err(Error::InvalidModel(format!("lattice {dims:?} has {product} sites, not N = {}", self.n)));
            }
            return Ok(dims.clone());
        }
        if rows == 0 || self.n % rows != 0 {
            return Err(Error::InvalidModel(format!("N = {} is not divisible into {rows} rows", self.n)));
        }
        Ok(if rows == 1 { vec![self.n] } else { vec![rows, self.n / rows] })
    }

    pub fn build(&self, params: Params, key: DisorderKey) -> Result<ModelInstance> {
        let Params { beta, gamma, h } = params;
        match &self.family {
            ModelFamily::Sk => builders::build_sk_keyed(self.n, beta, gamma, h, key),
            ModelFamily::Ea { periodic, .. } => builders::build_ea_keyed(&self.lattice_dims()?, *periodic, gamma, key),
            ModelFamily::Rfim { periodic, coupling, .. } => {
                builders::build_rfim_keyed(&self.lattice_dims()?, *periodic, *coupling, gamma, key)
            }
            ModelFamily::Pspin { p } => builders::build_pspin_keyed(self.n, *p, beta, gamma, h, key),
        }
    }

    /// The `sample_index`-th disorder sample under `mode`.
    pub fn sample(&self, params: Params, master_seed: u64, sample_index: u64, mode: DisorderMode) -> Result<ModelInstance> {
        self.build(params, mode.key(master_seed, sample_index))
    }

    /// Builds the sample factory used by quenched estimators.
    pub fn factory(
        &self,
        params: Params,
        master_seed: u64,
        mode: DisorderMode,
    ) -> impl Fn(u64) -> Result<ModelInstance> + Sync + '_ {
        move |index| self.sample(params, master_seed, index, mode)
    }
}
