use std::collections::BTreeMap;

use super::{Counts, GaussianFunctional};

/// A real polynomial in `dimension` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dimension: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

/// `E[g^k]` for standard normal `g`: `(k - 1)!!` for even `k`, zero otherwise.
pub fn gaussian_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        (1..k).step_by(2).map(f64::from).product()
    }
}

impl Polynomial {
    pub fn new(dimension: usize, terms: impl IntoIterator<Item = (f64, Vec<u32>)>) -> Self {
        let mut p = Self { dimension, terms: BTreeMap::new() };
        for (c, e) in terms {
            assert_eq!(e.len(), dimension, "exponent vector length");
            *p.terms.entry(e).or_insert(0.0) += c;
        }
        p.terms.retain(|_, c| *c != 0.0);
        p
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().sum::<u32>() as usize).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, v)| v.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Partial derivative with multiplicities `counts`.
    pub fn derivative(&self, counts: &Counts) -> Polynomial {
        let terms = self.terms.iter().filter_map(|(e, c)| {
            let mut coef = *c;
            let mut exps = e.clone();
            for (k, &d) in exps.iter_mut().zip(counts) {
                if d > *k {
                    return None;
                }
                for j in 0..d {
                    coef *= f64::from(*k - j);
                }
                *k -= d;
            }
            Some((coef, exps))
        });
        Polynomial::new(self.dimension, terms.collect::<Vec<_>>())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut terms = Vec::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                terms.push((ca * cb, ea.iter().zip(eb).map(|(a, b)| a + b).collect()));
            }
        }
        Polynomial::new(self.dimension, terms)
    }

    /// Exact `E[p(g)]` under i.i.d. standard normals.
    pub fn expectation(&self) -> f64 {
        self.terms.iter().map(|(e, c)| c * e.iter().map(|&k| gaussian_moment(k)).product::<f64>()).sum()
    }

    /// Exact `Var[p(g)]`.
    pub fn variance(&self) -> f64 {
        let m = self.expectation();
        self.mul(self).expectation() - m * m
    }

    /// The polynomial as a functional with pointwise analytic derivatives.
    pub fn functional(&self) -> GaussianFunctional {
        let (value, derivs) = (self.clone(), self.clone());
        GaussianFunctional::new(self.dimension, move |x| value.eval(x))
            .with_derivatives(move |x, sets| sets.iter().map(|c| derivs.derivative(c).eval(x)).collect())
            .with_degree(self.degree())
    }
}
