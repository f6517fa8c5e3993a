use rand::Rng;
use rand_distr::StandardNormal;

use super::{merge_all, shard_map, McConfig};
use crate::error::{GeometryError, Result};
use crate::estimate::{IntegralEstimate, Moments};
use crate::linalg::{det, rng_from_seed, CMatrix};

/// Lebesgue volume of the Frobenius ball of radius `r` in `M_n(C) ≅ R^{2n²}`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    let half_dim = n * n;
    let factorial: f64 = (1..=half_dim).map(|k| k as f64).product();
    std::f64::consts::PI.powi(half_dim as i32) * r.powi(2 * half_dim as i32) / factorial
}

/// Uniform point of the shell `a ≤ ‖X‖_F ≤ b` (`a = 0` gives the ball).
fn shell_point<R: Rng + ?Sized>(n: usize, a: f64, b: f64, rng: &mut R) -> CMatrix {
    let dim = 2 * n * n;
    let mut x: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    // radius with density ∝ ρ^{dim-1} on [a, b]
    let (ad, bd) = (a.powi(dim as i32), b.powi(dim as i32));
    let u: f64 = rng.random();
    let rho = (ad + u * (bd - ad)).powf(1.0 / dim as f64);
    x.iter_mut().for_each(|v| *v *= rho / norm);
    CMatrix::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        num_complex::Complex64::new(x[k], x[k + 1])
    })
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(GeometryError::Dimension("matrix size must be at least 1".into()));
    }
    Ok(())
}

/// `∫_{‖X‖≤r} min(|det X|^{-2}, T) dLeb` for every `T` in `ts`, all from one
/// sample set so that differences in `T` are not swamped by sampling noise.
pub fn truncated_singular_integrals(n: usize, ts: &[f64], r: f64, config: &McConfig) -> Result<Vec<IntegralEstimate>> {
    check_n(n)?;
    if let Some(t) = ts.iter().find(|t| !(**t >= 1.0)) {
        return Err(GeometryError::InvalidArgument(format!("truncation level must be >= 1, got {t}")));
    }
    if !(r > 0.0) {
        return Err(GeometryError::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let parts = shard_map(config, |seed, count| {
        let mut rng = rng_from_seed(seed);
        let mut acc = vec![Moments::default(); ts.len()];
        for _ in 0..count {
            let x = shell_point(n, 0.0, r, &mut rng);
            let inv = det(&x).expect("square").norm_sqr().recip();
            for (m, &t) in acc.iter_mut().zip(ts) {
                m.push(inv.min(t));
            }
        }
        acc
    });
    let volume = ball_volume(n, r);
    Ok((0..ts.len())
        .map(|k| {
            let m = merge_all(&parts.iter().map(|p| p[k]).collect::<Vec<_>>());
            IntegralEstimate {
                mean: volume * m.mean(),
                std_error: volume * m.std_error(),
                samples: m.count,
                seed: config.seed,
                divergent: false,
                saturated: false,
            }
        })
        .collect())
}

pub fn truncated_singular_integral(n: usize, t: f64, r: f64, config: &McConfig) -> Result<IntegralEstimate> {
    Ok(truncated_singular_integrals(n, &[t], r, config)?[0])
}

/// `∫ |det X|^{-2}` over the shell `2^{-(k+1)} ≤ ‖X‖ ≤ 2^{-k}`.
///
/// Finite only for `n = 1` (where it equals `2π ln 2` for every `k`). For
/// `n ≥ 2` the shell integral is infinite; without a truncation in the
/// config the divergent marker is returned, with one the truncated value.
pub fn dyadic_shell_integral(n: usize, k: i32, config: &McConfig) -> Result<IntegralEstimate> {
    check_n(n)?;
    if n >= 2 && config.truncation.is_none() {
        return Ok(IntegralEstimate::divergent(config.seed));
    }
    let (a, b) = (0.5f64.powi(k + 1), 0.5f64.powi(k));
    let cap = config.truncation.unwrap_or(f64::INFINITY);
    let parts = shard_map(config, |seed, count| {
        let mut rng = rng_from_seed(seed);
        let mut m = Moments::default();
        for _ in 0..count {
            let x = shell_point(n, a, b, &mut rng);
            m.push(det(&x).expect("square").norm_sqr().recip().min(cap));
        }
        m
    });
    let m = merge_all(&parts);
    let volume = ball_volume(n, b) - ball_volume(n, a);
    Ok(IntegralEstimate {
        mean: volume * m.mean(),
        std_error: volume * m.std_error(),
        samples: m.count,
        seed: config.seed,
        divergent: false,
        saturated: false,
    })
}

/// Least-squares slope of `values` against `ln ts`.
pub fn log_slope(ts: &[f64], values: &[f64]) -> f64 {
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = values.iter().sum::<f64>() / len;
    let sxy: f64 = xs.iter().zip(values).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Slopes against `ln T` over each sliding window of `window` consecutive points.
pub fn segment_slopes(ts: &[f64], values: &[f64], window: usize) -> Vec<f64> {
    (0..=ts.len().saturating_sub(window)).map(|i| log_slope(&ts[i..i + window], &values[i..i + window])).collect()
}
