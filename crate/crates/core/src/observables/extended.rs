use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::histogram::total_variation;
use super::{bin_index, check_self_overlap, overlap_matrix};
use crate::error::{Error, Result};
use crate::gibbs::GibbsEnsemble;
use crate::model::ModelInstance;
use crate::rng::{self, Lane};

/// One conditioning cell: a bin index for each overlap in `R_n`, in row-major pair order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedGgCell {
    pub cell: Vec<usize>,
    pub count: u64,
    /// Binned law of `R_{1,n+1}` given that `R_n` falls in the cell.
    pub conditional: Vec<f64>,
    /// `(1/n) L(R_{1,2}) + (1/n) sum_{l=2..n} delta_{R_{1,l}}`, averaged over the cell.
    pub mixture: Vec<f64>,
    pub total_variation: f64,
}

/// Finite-N comparison of the conditional law of `R_{1,n+1}` given `R_n` with
/// the mixture predicted by the extended identities. A diagnostic only: small
/// systems are not expected to satisfy the identities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedGgTable {
    pub arity: usize,
    pub bins: usize,
    pub cells: Vec<ExtendedGgCell>,
    /// Conditioning cells that received no tuple.
    pub empty_cells: u64,
    pub total_cells: u64,
    /// Count-weighted mean of the per-cell total-variation distances.
    pub summary_tv: f64,
    pub note: String,
}

#[derive(Default)]
struct CellAcc {
    count: u64,
    conditional: Vec<u64>,
    points: Vec<f64>,
}

type Tuples = Vec<(Vec<usize>, usize, Vec<usize>)>;

/// Bins for one disorder sample: `(cell, bin of R_{1,n+1}, bins of R_{1,2..n})` per tuple, plus bins of `R_{1,2}`.
fn sample_bins(instance: ModelInstance, n: usize, draws: usize, bins: usize, seed: u64) -> Result<(Tuples, Vec<usize>)> {
    let r11 = check_self_overlap(&instance)?;
    let ensemble = GibbsEnsemble::new(instance);
    let mut sampler = ensemble.replica_sampler(n + 1, seed)?;
    let mut tuples = Vec::with_capacity(draws);
    let mut r12 = Vec::with_capacity(draws);
    for _ in 0..draws {
        let m = overlap_matrix(ensemble.instance(), &sampler.draw_tuple(n + 1));
        let mut cell = Vec::with_capacity(n * (n - 1) / 2);
        for a in 0..n {
            for b in a + 1..n {
                cell.push(bin_index(m[a][b], r11, bins));
            }
        }
        let points = (1..n).map(|l| bin_index(m[0][l], r11, bins)).collect();
        r12.push(bin_index(m[0][1], r11, bins));
        tuples.push((cell, bin_index(m[0][n], r11, bins), points));
    }
    Ok((tuples, r12))
}

/// Tabulates the conditional law of `R_{1,n+1}` given binned `R_n` against the mixture law.
///
/// All tuples are pooled across disorder samples, so both laws are `nu`-averaged.
pub fn extended_gg_diagnostic<F>(
    factory: F,
    n: usize,
    disorder_samples: usize,
    replica_draws: usize,
    bins: usize,
    master_seed: u64,
) -> Result<ExtendedGgTable>
where
    F: Fn(u64) -> Result<ModelInstance> + Sync,
{
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidArgument(format!("extended diagnostic supports n = 2 or 3, got {n}")));
    }
    if bins == 0 || disorder_samples == 0 || replica_draws == 0 {
        return Err(Error::InvalidArgument("bins, disorder_samples and replica_draws must be positive".into()));
    }
    let per_sample: Vec<(Tuples, Vec<usize>)> = (0..disorder_samples as u64)
        .into_par_iter()
        .map(|s| sample_bins(factory(s)?, n, replica_draws, bins, rng::derive_seed(master_seed, s, Lane::Replica)))
        .collect::<Result<_>>()?;

    let mut law = vec![0.0; bins];
    let mut total = 0u64;
    let mut cells: BTreeMap<Vec<usize>, CellAcc> = BTreeMap::new();
    for (tuples, r12) in &per_sample {
        for &b in r12 {
            law[b] += 1.0;
        }
        total += r12.len() as u64;
        for (cell, next, points) in tuples {
            let acc = cells.entry(cell.clone()).or_insert_with(|| CellAcc {
                count: 0,
                conditional: vec![0; bins],
                points: vec![0.0; bins],
            });
            acc.count += 1;
            acc.conditional[*next] += 1;
            for &p in points {
                acc.points[p] += 1.0;
            }
        }
    }
    for v in law.iter_mut() {
        *v /= total as f64;
    }

    let nf = n as f64;
    let mut weighted = 0.0;
    let rows: Vec<ExtendedGgCell> = cells
        .into_iter()
        .map(|(cell, acc)| {
            let c = acc.count as f64;
            let conditional: Vec<f64> = acc.conditional.iter().map(|&k| k as f64 / c).collect();
            let mixture: Vec<f64> = law.iter().zip(&acc.points).map(|(l, p)| l / nf + p / (nf * c)).collect();
            let tv = total_variation(&conditional, &mixture);
            weighted += c * tv;
            ExtendedGgCell { cell, count: acc.count, conditional, mixture, total_variation: tv }
        })
        .collect();

    let total_cells = (bins as u64).pow((n * (n - 1) / 2) as u32);
    Ok(ExtendedGgTable {
        arity: n,
        bins,
        empty_cells: total_cells - rows.len() as u64,
        total_cells,
        summary_tv: weighted / total as f64,
        cells: rows,
        note: "finite-N diagnostic; not a check of the infinite-volume identities".into(),
    })
}
