//! Direct evaluation over every configuration in natural bit order, each
//! weight recomputed from scratch. Slow; used to cross-check the Gray-code engine.

use super::check_exact;
use crate::error::Result;
use crate::model::ModelInstance;
use crate::spin::SpinConfiguration;

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceMoments {
    pub log_partition: f64,
    pub feature_means: Vec<f64>,
}

pub fn reference_moments(instance: &ModelInstance) -> Result<ReferenceMoments> {
    let n = instance.n();
    check_exact(n)?;
    let log_w: Vec<f64> = (0..1u64 << n).map(|b| instance.log_weight(&SpinConfiguration::from_bits(n, b))).collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = log_w.iter().map(|w| (w - max).exp()).sum();
    let log_partition = max + z.ln();
    let mut feature_means = vec![0.0; instance.feature_count()];
    for (b, w) in log_w.iter().enumerate() {
        let p = (w - log_partition).exp();
        for (m, f) in feature_means.iter_mut().zip(instance.feature_values(&SpinConfiguration::from_bits(n, b as u64))) {
            *m += p * f;
        }
    }
    Ok(ReferenceMoments { log_partition, feature_means })
}
