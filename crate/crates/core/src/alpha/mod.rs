//! Experiments around the alpha invariant: the extremal family `f_n ∘ ψ`,
//! Monte-Carlo integration of `e^{-αφ}` over the Grassmannian, and the
//! divergence experiments for the singular integrand `|det X|^{-2}`.
//!
//! All estimators are sharded: shard `k` draws from a seed derived from
//! `(seed, k)` and partial sums are merged in shard order, so the result is
//! the same whether shards run serially or on a thread pool.

mod extremal;
mod integrate;
mod singular;
mod witness;

pub use extremal::{f_n, kink, phi_n, ExtremalFamily, ExtremalForm};
pub use integrate::{
    alpha_scan, mc_integral, mc_integral_psi_law, sample_grassmann, scaled_alpha_threshold, total_volume, total_volume_with, AlphaScan,
    PsiLaw, ScanEstimator, ScanOptions, Verdict, VolumeProposal, EXPONENT_CLIP,
};
pub use singular::{
    ball_volume, dyadic_shell_integral, log_slope, segment_slopes, truncated_singular_integral, truncated_singular_integrals,
};
pub use witness::{truncated_f_integral, upper_bound_witness, UpperBoundWitness};

use serde::{Deserialize, Serialize};

use crate::atlas::GrassmannPoint;
use crate::estimate::Moments;
use crate::linalg::{derive_seed, det, minor, IndexSet, Seed};

/// Monte-Carlo run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: Seed,
    pub samples: u64,
    pub shards: u64,
    /// Optional cap applied to integrand values.
    pub truncation: Option<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { seed: 0x5EED, samples: 100_000, shards: 8, truncation: None }
    }
}

impl McConfig {
    pub fn new(seed: Seed, samples: u64) -> Self {
        Self { seed, samples, ..Self::default() }
    }

    pub fn with_seed(self, seed: Seed) -> Self {
        Self { seed, ..self }
    }

    pub fn with_samples(self, samples: u64) -> Self {
        Self { samples, ..self }
    }

    /// Same sizes, seed derived for sub-experiment `index`.
    pub fn derived(self, index: u64) -> Self {
        Self { seed: derive_seed(self.seed, index), ..self }
    }

    fn shard_plan(&self) -> Vec<(Seed, u64)> {
        let shards = self.shards.max(1);
        let samples = self.samples.max(1);
        let base = samples / shards;
        let extra = samples % shards;
        (0..shards).map(|k| (derive_seed(self.seed, k), base + u64::from(k < extra))).filter(|&(_, n)| n > 0).collect()
    }
}

/// Runs `work(shard_seed, shard_samples)` for every shard, results in shard order.
pub(crate) fn shard_map<T, F>(config: &McConfig, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(Seed, u64) -> T + Sync + Send,
{
    let plan = config.shard_plan();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        plan.into_par_iter().map(|(s, n)| work(s, n)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        plan.into_iter().map(|(s, n)| work(s, n)).collect()
    }
}

pub(crate) fn merge_all(parts: &[Moments]) -> Moments {
    parts.iter().fold(Moments::default(), |acc, m| acc.merge(m))
}

/// `ψ_I = log(det(Mᵀ M̄) / |det m_I(M)|²)`, `+∞` when `m_I(M)` is singular.
///
/// Independent of the representative, zero at the canonical point of `I`
/// and equal to the Kähler potential in the chart of `I`.
pub fn psi(chart: &IndexSet, pt: &GrassmannPoint) -> f64 {
    let m = minor(pt.rep(), chart).expect("index set matches the point");
    let minor_sq = det(&m).expect("square").norm_sqr();
    if minor_sq == 0.0 {
        return f64::INFINITY;
    }
    let gram = det(&pt.rep().gram()).expect("square").re;
    (gram / minor_sq).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{canonical_point, to_chart};
    use crate::linalg::{sample_ginibre, CMatrix};
    use crate::metric::potential;
    use num_complex::Complex64;

    #[test]
    fn psi_examples() {
        let chart = IndexSet::leading(2, 3);
        assert!(psi(&chart, &canonical_point(&chart)).abs() < 1e-15);
        let z = Complex64::new(0.3, -1.2);
        let pt = GrassmannPoint::new(CMatrix::from_fn(2, 1, |i, _| if i == 0 { Complex64::new(1.0, 0.0) } else { z })).unwrap();
        assert!((psi(&IndexSet::leading(1, 1), &pt) - (1.0 + z.norm_sqr()).ln()).abs() < 1e-14);
        let off = canonical_point(&IndexSet::from_one_based(2, 3, &[3, 4]).unwrap());
        assert_eq!(psi(&chart, &off), f64::INFINITY);
    }

    #[test]
    fn psi_is_representative_independent_and_matches_potential() {
        let chart = IndexSet::leading(2, 3);
        for seed in 0..20 {
            let pt = GrassmannPoint::new(sample_ginibre(5, 2, seed)).unwrap();
            let g = sample_ginibre(2, 2, seed + 500);
            let moved = pt.with_right_action(&g).unwrap();
            assert!((psi(&chart, &pt) - psi(&chart, &moved)).abs() <= 1e-10);
            let z = to_chart(&pt, &chart).unwrap();
            assert!((psi(&chart, &pt) - potential(z.z())).abs() <= 1e-10);
        }
    }

    #[test]
    fn shard_plan_covers_all_samples() {
        let cfg = McConfig { seed: 1, samples: 103, shards: 8, truncation: None };
        let plan = cfg.shard_plan();
        assert_eq!(plan.iter().map(|s| s.1).sum::<u64>(), 103);
        let tiny = McConfig { seed: 1, samples: 3, shards: 8, truncation: None };
        assert_eq!(tiny.shard_plan().len(), 3);
    }
}
