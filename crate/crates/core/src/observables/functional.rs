use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// The overlaps `R_{l,l'}` for `l < l'` among `n` replicas, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapArray {
    n: usize,
    values: Vec<f64>,
}

fn pair_index(n: usize, a: usize, b: usize) -> usize {
    debug_assert!(a < b && b < n);
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

impl OverlapArray {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        let expected = n * n.saturating_sub(1) / 2;
        if values.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "{n} replicas need {expected} overlaps, got {}",
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    /// The first `n` replicas of a full symmetric overlap matrix.
    pub fn from_matrix(n: usize, matrix: &[Vec<f64>]) -> Self {
        let mut values = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for a in 0..n {
            for b in a + 1..n {
                values.push(matrix[a][b]);
            }
        }
        Self { n, values }
    }

    pub fn replicas(&self) -> usize {
        self.n
    }

    /// `R_{a,b}` with zero-based replica indices, `a != b`.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.values[pair_index(self.n, a, b)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub type OverlapFn = Arc<dyn Fn(&OverlapArray) -> f64 + Send + Sync>;

/// A named bounded function of the overlap array of `arity` replicas.
#[derive(Clone)]
pub struct OverlapFunctional {
    name: String,
    arity: usize,
    bound: f64,
    eval: OverlapFn,
}

impl fmt::Debug for OverlapFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OverlapFunctional")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("bound", &self.bound)
            .finish()
    }
}

/// Names accepted by [`OverlapFunctional::by_name`].
pub const FUNCTIONAL_NAMES: [&str; 6] = ["one", "r12", "r12_squared", "tanh5_r12", "prod_overlaps", "bump_r12"];

/// Steepness of the logistic bump, in units of `1 / R_{1,1}`.
const BUMP_STEEPNESS: f64 = 20.0;

impl OverlapFunctional {
    /// Builds a functional and checks `|f| <= bound` on a grid of overlap arrays in `[-r11, r11]`.
    pub fn new<F>(name: impl Into<String>, arity: usize, bound: f64, self_overlap: f64, eval: F) -> Result<Self>
    where
        F: Fn(&OverlapArray) -> f64 + Send + Sync + 'static,
    {
        let name = name.into();
        if arity < 2 {
            return Err(Error::InvalidArgument(format!("functional {name}: arity must be at least 2")));
        }
        let f = Self { name, arity, bound, eval: Arc::new(eval) };
        f.check_bound(self_overlap)?;
        Ok(f)
    }

    /// A library functional; `self_overlap` is the model's constant `R_{1,1}`.
    pub fn by_name(name: &str, arity: usize, self_overlap: f64) -> Result<Self> {
        let r11 = self_overlap;
        match name {
            "one" => Self::new(name, arity, 1.0, r11, |_| 1.0),
            "r12" => Self::new(name, arity, r11, r11, |r| r.get(0, 1)),
            "r12_squared" => Self::new(name, arity, r11 * r11, r11, |r| r.get(0, 1).powi(2)),
            "tanh5_r12" => Self::new(name, arity, 1.0, r11, |r| (5.0 * r.get(0, 1)).tanh()),
            "prod_overlaps" => {
                let pairs = (arity * (arity - 1) / 2) as i32;
                Self::new(name, arity, r11.powi(pairs), r11, |r| r.values().iter().product())
            }
            "bump_r12" => {
                let q0 = 0.5 * r11;
                let k = BUMP_STEEPNESS / r11.max(f64::MIN_POSITIVE);
                Self::new(name, arity, 1.0, r11, move |r| 1.0 / (1.0 + (-k * (r.get(0, 1) - q0)).exp()))
            }
            _ => Err(Error::Unknown { kind: "functional", name: name.to_string() }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    #[inline]
    pub fn eval(&self, overlaps: &OverlapArray) -> f64 {
        (self.eval)(overlaps)
    }

    fn check_bound(&self, r11: f64) -> Result<()> {
        let pairs = self.arity * (self.arity - 1) / 2;
        let levels = [-1.0, -0.5, 0.0, 0.3, 1.0];
        let tolerance = 1e-12 * self.bound.abs().max(1.0);
        let probe = |values: Vec<f64>| -> Result<()> {
            let v = self.eval(&OverlapArray { n: self.arity, values });
            if !v.is_finite() || v.abs() > self.bound + tolerance {
                return Err(Error::InvalidArgument(format!(
                    "functional {} returned {v} outside [-{b}, {b}]",
                    self.name,
                    b = self.bound
                )));
            }
            Ok(())
        };
        for &level in &levels {
            probe(vec![level * r11; pairs])?;
        }
        // Mixed-sign arrays cycling through the levels.
        for shift in 0..levels.len() {
            probe((0..pairs).map(|i| levels[(i + shift) % levels.len()] * r11).collect())?;
        }
        Ok(())
    }
}
