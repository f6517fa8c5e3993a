use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{mc_integral, merge_all, sample_grassmann, shard_map, ExtremalFamily, ExtremalForm, McConfig};
use crate::atlas::{chart_gram_det, disjoint_chart_identity, GrassmannPoint};
use crate::error::{GeometryError, Result};
use crate::estimate::{IntegralEstimate, Moments};
use crate::linalg::{complex_normal, derive_seed, enumerate_index_sets, rng_from_seed, CMatrix, IndexSet};

/// Numerical evidence for the upper bound `α ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundWitness {
    pub p: usize,
    pub q: usize,
    pub ns: Vec<u32>,
    /// `∫ e^{-φ_n} dV` for each `n`, one shared sample set.
    pub monotone_estimates: Vec<IntegralEstimate>,
    pub monotone: bool,
    pub radii: Vec<f64>,
    /// `∫_{‖Z‖<R} F^{1-(p+q)} dLeb` for each radius.
    pub truncated: Vec<IntegralEstimate>,
    pub truncated_growing: bool,
    /// Relative residuals of the disjoint-chart identity at random points.
    pub disjoint_residuals: Vec<f64>,
}

impl UpperBoundWitness {
    pub fn max_disjoint_residual(&self) -> f64 {
        self.disjoint_residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// `∫_{‖Z‖<R} F^{1-(p+q)} dLeb` over the chart ball of radius `R`.
///
/// The radius is drawn so that `t = ln(1+ρ²)` is uniform on `[0, ln(1+R²)]`
/// and the direction uniformly; for `p = q = 1` the weight is constant.
pub fn truncated_f_integral(p: usize, q: usize, radius: f64, config: &McConfig) -> Result<IntegralEstimate> {
    if !(radius > 0.0) {
        return Err(GeometryError::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let chart = IndexSet::leading(p, q);
    let d = p * q;
    let exponent = 1.0 - (p + q) as f64;
    let top = radius.powi(2).ln_1p();
    let factorial: f64 = (1..d).map(|k| k as f64).product();
    let prefactor = top * std::f64::consts::PI.powi(d as i32) / factorial;
    let parts = shard_map(config, |seed, n| {
        let mut rng = rng_from_seed(seed);
        let mut m = Moments::default();
        for _ in 0..n {
            let t = top * rng.random::<f64>();
            let rho_sq = t.exp_m1();
            let dir = CMatrix::from_fn(q, p, |_, _| complex_normal(&mut rng));
            let z = dir.scale_real(rho_sq.sqrt() / dir.frobenius_norm());
            let f = chart_gram_det(&chart, &z);
            m.push(prefactor * rho_sq.powi(d as i32 - 1) * t.exp() * f.powf(exponent));
        }
        m
    });
    let m = merge_all(&parts);
    Ok(IntegralEstimate {
        mean: m.mean(),
        std_error: m.std_error(),
        samples: m.count,
        seed: config.seed,
        divergent: false,
        saturated: false,
    })
}

/// Runs the three parts of the upper-bound argument at `(p, q)`.
pub fn upper_bound_witness(
    p: usize,
    q: usize,
    ns: &[u32],
    radii: &[f64],
    residual_points: usize,
    config: &McConfig,
) -> Result<UpperBoundWitness> {
    if p > q {
        return Err(GeometryError::RequiresPNotAboveQ { p, q });
    }
    let chart = IndexSet::leading(p, q);
    let mut monotone_estimates = Vec::with_capacity(ns.len());
    for &n in ns {
        let fam = ExtremalFamily::new(chart.clone(), n, ExtremalForm::ExactMax)?;
        monotone_estimates.push(mc_integral(1.0, &|pt: &GrassmannPoint| fam.value(pt), p, q, config)?);
    }
    let monotone = monotone_estimates.windows(2).all(|w| w[0].mean <= w[1].mean);

    let truncated = radii
        .iter()
        .enumerate()
        .map(|(i, &r)| truncated_f_integral(p, q, r, &config.derived(0x7000 + i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let truncated_growing = truncated.windows(2).all(|w| w[0].mean < w[1].mean);

    let sets = enumerate_index_sets(p, q);
    let disjoint_pairs: Vec<(&IndexSet, &IndexSet)> =
        sets.iter().flat_map(|a| sets.iter().map(move |b| (a, b))).filter(|(a, b)| a.is_disjoint(b)).collect();
    let mut disjoint_residuals = Vec::with_capacity(residual_points);
    for i in 0..residual_points {
        let pt = sample_grassmann(p, q, derive_seed(config.seed, 0x9000 + i as u64));
        let (a, b) = disjoint_pairs[i % disjoint_pairs.len()];
        let (lhs, rhs) = disjoint_chart_identity(&pt, a, b)?;
        disjoint_residuals.push((lhs - rhs).abs() / lhs.abs());
    }
    Ok(UpperBoundWitness {
        p,
        q,
        ns: ns.to_vec(),
        monotone_estimates,
        monotone,
        radii: radii.to_vec(),
        truncated,
        truncated_growing,
        disjoint_residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn truncated_f_on_the_projective_line() {
        let config = McConfig { seed: 3, samples: 1_000, shards: 4, truncation: None };
        for r in [1.0, 10.0, 100.0] {
            let e = truncated_f_integral(1, 1, r, &config).unwrap();
            let reference = PI * (1.0 + r * r).ln();
            assert!(e.relative_error(reference) < 1e-12, "{r}: {e:?}");
        }
    }

    #[test]
    fn witness_on_small_grassmannians() {
        let config = McConfig { seed: 4, samples: 20_000, shards: 4, truncation: None };
        for (p, q) in [(1, 1), (1, 2), (2, 2)] {
            let w = upper_bound_witness(p, q, &[2, 4, 8, 16], &[1.0, 10.0, 100.0], 30, &config).unwrap();
            assert!(w.monotone, "({p},{q})");
            assert!(w.truncated_growing, "({p},{q})");
            assert!(w.max_disjoint_residual() <= 1e-8, "({p},{q}) {}", w.max_disjoint_residual());
        }
        assert!(upper_bound_witness(2, 1, &[2], &[1.0], 1, &config).is_err());
    }
}
