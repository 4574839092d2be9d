use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::{self, Lane};
use crate::spin::SpinConfiguration;

/// A real function of a spin configuration.
pub type ConfigFn = Arc<dyn Fn(&SpinConfiguration) -> f64 + Send + Sync>;

/// One function `f_alpha : {-1,1}^N -> [-1, 1]`.
#[derive(Clone)]
pub enum Feature {
    /// Product of the spins at the listed sites (a site, a bond, a p-plaquette).
    Monomial(Vec<usize>),
    /// Arbitrary function depending only on the spins in `support`.
    Custom { label: String, support: Vec<usize>, eval: ConfigFn },
}

impl Feature {
    pub fn custom<F>(label: impl Into<String>, support: Vec<usize>, eval: F) -> Self
    where
        F: Fn(&SpinConfiguration) -> f64 + Send + Sync + 'static,
    {
        Feature::Custom { label: label.into(), support, eval: Arc::new(eval) }
    }

    #[inline]
    pub fn eval(&self, config: &SpinConfiguration) -> f64 {
        match self {
            Feature::Monomial(sites) => config.product(sites),
            Feature::Custom { eval, .. } => eval(config),
        }
    }

    pub fn support(&self) -> &[usize] {
        match self {
            Feature::Monomial(sites) => sites,
            Feature::Custom { support, .. } => support,
        }
    }

    pub fn is_monomial(&self) -> bool {
        matches!(self, Feature::Monomial(_))
    }
}

impl fmt::Debug for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::Monomial(sites) => write!(f, "Monomial{sites:?}"),
            Feature::Custom { label, support, .. } => write!(f, "Custom({label}, {support:?})"),
        }
    }
}

/// The index set `A_N` together with its features and the site incidence lists.
#[derive(Clone, Debug)]
pub struct FeatureSet {
    n: usize,
    features: Vec<Feature>,
    incidence: Vec<Vec<usize>>,
    growth_constant: f64,
}

/// Default `c` in `|A_N| <= c N`.
pub const DEFAULT_GROWTH_CONSTANT: f64 = 4.0;

impl FeatureSet {
    /// Assembles a feature set over `n` sites.
    ///
    /// `growth_constant` is the declared `c` in `|A_N| <= c N`. Exceeding it only
    /// logs a warning.
    pub fn new(n: usize, features: Vec<Feature>, growth_constant: f64) -> Result<Self> {
        let mut incidence = vec![Vec::new(); n];
        for (alpha, feature) in features.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &site in feature.support() {
                if site >= n {
                    return Err(Error::SiteOutOfRange { site, n });
                }
                if seen.insert(site) {
                    incidence[site].push(alpha);
                }
            }
            if let Feature::Monomial(sites) = feature {
                if seen.len() != sites.len() {
                    return Err(Error::InvalidModel(format!(
                        "monomial feature {alpha} repeats a site: {sites:?}"
                    )));
                }
            }
        }
        if features.len() as f64 > growth_constant * n as f64 {
            log::warn!(
                "|A_N| = {} exceeds the declared bound {} * N = {}",
                features.len(),
                growth_constant,
                growth_constant * n as f64
            );
        }
        Ok(Self { n, features, incidence, growth_constant })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, features: Vec::new(), incidence: vec![Vec::new(); n], growth_constant: DEFAULT_GROWTH_CONSTANT }
    }

    /// `f_i(sigma) = sigma_i` for every site.
    pub fn sites(n: usize) -> Self {
        let features = (0..n).map(|i| Feature::Monomial(vec![i])).collect();
        Self::new(n, features, DEFAULT_GROWTH_CONSTANT).expect("site features are valid")
    }

    /// `f_(i,j)(sigma) = sigma_i sigma_j` for every listed edge.
    pub fn bonds(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let features = edges.iter().map(|&(i, j)| Feature::Monomial(vec![i, j])).collect();
        Self::new(n, features, DEFAULT_GROWTH_CONSTANT)
    }

    /// Products over every `p`-subset of sites, in lexicographic order.
    ///
    /// `|A_N| = C(N, p)` grows faster than `N` for `p >= 2`; the growth bound is
    /// declared accordingly rather than enforced.
    pub fn p_subsets(n: usize, p: usize) -> Result<Self> {
        if p == 0 || p > n {
            return Err(Error::InvalidArgument(format!("p = {p} must lie in 1..={n}")));
        }
        let subsets = combinations(n, p);
        let c = subsets.len() as f64 / n as f64;
        Self::new(n, subsets.into_iter().map(Feature::Monomial).collect(), c.max(DEFAULT_GROWTH_CONSTANT))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn growth_constant(&self) -> f64 {
        self.growth_constant
    }

    pub fn get(&self, alpha: usize) -> &Feature {
        &self.features[alpha]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Feature> {
        self.features.iter()
    }

    /// Features whose support contains `site`.
    pub fn incident(&self, site: usize) -> &[usize] {
        &self.incidence[site]
    }

    pub fn all_monomial(&self) -> bool {
        self.features.iter().all(Feature::is_monomial)
    }

    pub fn values(&self, config: &SpinConfiguration) -> Vec<f64> {
        self.features.iter().map(|f| f.eval(config)).collect()
    }

    /// Checks `|f_alpha| <= 1` on the probe configurations plus 64 seeded random ones.
    pub fn validate(&self, seed: u64) -> Result<()> {
        if self.all_monomial() {
            return Ok(());
        }
        let mut rng = rng::stream(seed, 0, Lane::Probe);
        let probes = probe_configurations(self.n, 0)
            .into_iter()
            .chain((0..64).map(|_| SpinConfiguration::random(self.n, &mut rng)));
        for config in probes {
            for (index, feature) in self.features.iter().enumerate() {
                let value = feature.eval(&config);
                if !(value.abs() <= 1.0) {
                    return Err(Error::FeatureOutOfRange { index, value });
                }
            }
        }
        Ok(())
    }
}

/// All-plus, all-minus and alternating, followed by `random` seeded configurations.
pub fn probe_configurations(n: usize, random: usize) -> Vec<SpinConfiguration> {
    const PROBE_SEED: u64 = 0x5eed_0f_9a0be;
    let mut out = vec![
        SpinConfiguration::all_plus(n),
        SpinConfiguration::all_minus(n),
        SpinConfiguration::alternating(n),
    ];
    let mut rng = rng::stream(PROBE_SEED, n as u64, Lane::Probe);
    out.extend((0..random).map(|_| SpinConfiguration::random(n, &mut rng)));
    out
}

/// Undirected nearest-neighbour edges of a hypercubic lattice, row-major site order.
///
/// Each edge appears once with `i < j`; self-loops and the duplicate bonds that
/// periodic wrapping creates in a side of length 2 are dropped.
pub fn lattice_edges(dims: &[usize], periodic: bool) -> Result<(usize, Vec<(usize, usize)>)> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidModel(format!("empty lattice {dims:?}")));
    }
    let n: usize = dims.iter().product();
    let mut strides = vec![1usize; dims.len()];
    for d in (0..dims.len() - 1).rev() {
        strides[d] = strides[d + 1] * dims[d + 1];
    }
    let mut edges = BTreeSet::new();
    for site in 0..n {
        for (d, (&len, &stride)) in dims.iter().zip(&strides).enumerate() {
            let coord = (site / stride) % len;
            let next = if coord + 1 < len {
                coord + 1
            } else if periodic {
                0
            } else {
                continue;
            };
            let neighbour = site - coord * strides[d] + next * stride;
            if neighbour != site {
                edges.insert((site.min(neighbour), site.max(neighbour)));
            }
        }
    }
    Ok((n, edges.into_iter().collect()))
}

/// Lexicographic `k`-subsets of `0..n`.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        // Rightmost position that can still advance.
        let mut i = k;
        while i > 0 && current[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        current[i - 1] += 1;
        for j in i..k {
            current[j] = current[j - 1] + 1;
        }
    }
}
