//! Small statistics helpers shared by the estimators.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Multiplies the accumulated value by `factor`.
    #[inline]
    pub fn scale(&mut self, factor: f64) {
        self.sum *= factor;
        self.compensation *= factor;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// A point estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64) -> Self {
        Self { value, std_error }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0 }
    }

    /// `|value - target| <= k * std_error`.
    pub fn consistent_with(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

pub fn mean(values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value() / values.len() as f64
}

/// Unbiased sample variance (`n - 1` denominator); zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let mut acc = CompensatedSum::new();
    for &v in values {
        acc.add((v - m) * (v - m));
    }
    acc.value() / (values.len() - 1) as f64
}

/// Mean and standard error of the mean of i.i.d. values.
pub fn mean_estimate(values: &[f64]) -> Estimate {
    Estimate::new(mean(values), (sample_variance(values) / values.len() as f64).sqrt())
}

/// Unbiased sample variance with a standard error from the spread of squared deviations.
pub fn variance_estimate(values: &[f64]) -> Estimate {
    let m = mean(values);
    let squares: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    let n = values.len() as f64;
    let se = (sample_variance(&squares) / n).sqrt() * n / (n - 1.0);
    Estimate::new(sample_variance(values), se)
}

/// Mean with a standard error from `batches` contiguous batch means.
///
/// Values are assigned to batches in order, so the result does not depend on
/// how the values were produced. With `batches >= values.len()` this reduces to
/// the i.i.d. standard error.
pub fn batch_mean_estimate(values: &[f64], batches: usize) -> Estimate {
    let n = values.len();
    assert!(n >= 2, "need at least two values for a standard error");
    let batches = batches.clamp(2, n);
    let means: Vec<f64> = (0..batches)
        .map(|b| {
            let lo = b * n / batches;
            let hi = (b + 1) * n / batches;
            mean(&values[lo..hi])
        })
        .collect();
    // Unequal batch sizes differ by at most one; weight by size for the mean.
    let overall = mean(values);
    Estimate::new(overall, (sample_variance(&means) / batches as f64).sqrt())
}

/// Trapezoid rule over a (possibly non-uniform) grid.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Trapezoid weights for the grid `xs`, so that `sum(w_i * y_i)` is the trapezoid integral.
pub fn trapezoid_weights(xs: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; xs.len()];
    for i in 0..xs.len().saturating_sub(1) {
        let half = 0.5 * (xs[i + 1] - xs[i]);
        w[i] += half;
        w[i + 1] += half;
    }
    w
}
