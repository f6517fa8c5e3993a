use rand::Rng;
use rand_distr::{Beta, Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{merge_all, psi, shard_map, ExtremalFamily, ExtremalForm, McConfig};
use crate::atlas::{chart_gram_det, GrassmannPoint};
use crate::error::{GeometryError, Result};
use crate::estimate::{IntegralEstimate, Moments};
use crate::linalg::{complementary_minor, ginibre_with, inverse, minor, rng_from_seed, CMatrix, IndexSet, Seed};
use crate::metric::ScalarField;

/// Exponents above this are clipped before `exp` and the estimate is flagged.
pub const EXPONENT_CLIP: f64 = 700.0;

// sub-stream used for the volume factor inside integrals
const VOLUME_STREAM: u64 = 0xF01;

/// Uniformly distributed point: the span of a Ginibre `(p+q)×p` matrix.
pub fn sample_grassmann(p: usize, q: usize, seed: Seed) -> GrassmannPoint {
    sample_grassmann_with(p, q, &mut rng_from_seed(seed))
}

pub fn sample_grassmann_with<R: Rng + ?Sized>(p: usize, q: usize, rng: &mut R) -> GrassmannPoint {
    loop {
        // rank deficiency has probability zero
        if let Ok(pt) = GrassmannPoint::new(ginibre_with(p + q, p, rng)) {
            return pt;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeProposal {
    /// Chart coordinates drawn independently with density `(1/π)(1+|z|²)^{-2}`.
    /// Exact (zero variance) for `pq = 1`; the weight has infinite variance
    /// as soon as `pq ≥ 2`.
    HeavyTailedProduct,
    /// `V = 1 / E[π^{-pq} e^{-‖Z‖²} F^{p+q}]` with `Z` the chart coordinates
    /// of a uniform point. Finite variance for every `(p, q)`.
    GaussianRatio,
    /// `HeavyTailedProduct` when `pq = 1`, otherwise `GaussianRatio`.
    Auto,
}

/// `∫_{C^{pq}} F^{-(p+q)} dLeb` in the leading chart.
pub fn total_volume(p: usize, q: usize, config: &McConfig) -> IntegralEstimate {
    total_volume_with(&IndexSet::leading(p, q), VolumeProposal::Auto, config)
}

pub fn total_volume_with(chart: &IndexSet, proposal: VolumeProposal, config: &McConfig) -> IntegralEstimate {
    let (p, q) = (chart.p(), chart.q());
    let d = p * q;
    let proposal = match proposal {
        VolumeProposal::Auto if d == 1 => VolumeProposal::HeavyTailedProduct,
        VolumeProposal::Auto => VolumeProposal::GaussianRatio,
        other => other,
    };
    let exponent = (p + q) as f64;
    let pi = std::f64::consts::PI;
    let parts = shard_map(config, |seed, n| {
        let mut rng = rng_from_seed(seed);
        let mut m = Moments::default();
        for _ in 0..n {
            let value = match proposal {
                VolumeProposal::HeavyTailedProduct => {
                    let mut log_density = 0.0;
                    let z = CMatrix::from_fn(q, p, |_, _| {
                        let u: f64 = rng.random();
                        let s = u / (1.0 - u);
                        let theta = 2.0 * pi * rng.random::<f64>();
                        log_density += -pi.ln() - 2.0 * s.ln_1p();
                        num_complex::Complex64::from_polar(s.sqrt(), theta)
                    });
                    (-exponent * chart_gram_det(chart, &z).ln() - log_density).exp()
                }
                _ => {
                    // chart coordinates of a Ginibre frame, without building the point
                    let frame = ginibre_with(p + q, p, &mut rng);
                    let z =
                        minor(&frame, chart).and_then(|m| inverse(&m)).and_then(|inv| complementary_minor(&frame, chart)?.try_mul(&inv));
                    match z {
                        Ok(z) => {
                            let norm_sq = z.frobenius_norm().powi(2);
                            (exponent * chart_gram_det(chart, &z).ln() - norm_sq - d as f64 * pi.ln()).exp()
                        }
                        // singular minor: the Gaussian factor vanishes in the limit
                        Err(_) => 0.0,
                    }
                }
            };
            m.push(value);
        }
        m
    });
    let m = merge_all(&parts);
    match proposal {
        VolumeProposal::GaussianRatio => {
            let mean = m.mean();
            IntegralEstimate {
                mean: 1.0 / mean,
                std_error: m.std_error() / (mean * mean),
                samples: m.count,
                seed: config.seed,
                divergent: false,
                saturated: false,
            }
        }
        _ => estimate_from(&m, config.seed, false),
    }
}

fn estimate_from(m: &Moments, seed: Seed, saturated: bool) -> IntegralEstimate {
    IntegralEstimate { mean: m.mean(), std_error: m.std_error(), samples: m.count, seed, divergent: false, saturated }
}

/// `e^{exponent}` with the exponent clipped at [`EXPONENT_CLIP`] and the
/// value capped at the configured truncation. The flag reports clipping.
fn guarded_exp(exponent: f64, truncation: Option<f64>) -> (f64, bool) {
    let clipped = exponent > EXPONENT_CLIP;
    let v = exponent.min(EXPONENT_CLIP).exp();
    (truncation.map_or(v, |t| v.min(t)), clipped)
}

/// Product of a mean estimate and an independent volume estimate.
fn times_volume(m: &Moments, volume: &IntegralEstimate, seed: Seed, saturated: bool) -> IntegralEstimate {
    let mean = m.mean();
    let se = ((volume.mean * m.std_error()).powi(2) + (mean * volume.std_error).powi(2)).sqrt();
    IntegralEstimate { mean: volume.mean * mean, std_error: se, samples: m.count, seed, divergent: false, saturated }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(GeometryError::InvalidArgument(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    Ok(())
}

/// `∫_G e^{-αφ} dV = V · E[e^{-αφ}]` over uniform points.
///
/// The mean is taken over `sample_grassmann` draws; `V` comes from
/// [`total_volume`] on a derived seed.
pub fn mc_integral<S: ScalarField + ?Sized>(alpha: f64, phi: &S, p: usize, q: usize, config: &McConfig) -> Result<IntegralEstimate> {
    check_alpha(alpha)?;
    let parts = shard_map(config, |seed, n| {
        let mut rng = rng_from_seed(seed);
        let mut m = Moments::default();
        let mut saturated = false;
        for _ in 0..n {
            let pt = sample_grassmann_with(p, q, &mut rng);
            let (v, s) = guarded_exp(-alpha * phi.value(&pt), config.truncation);
            saturated |= s;
            m.push(v);
        }
        (m, saturated)
    });
    let saturated = parts.iter().any(|x| x.1);
    let m = merge_all(&parts.iter().map(|x| x.0).collect::<Vec<_>>());
    let volume = total_volume(p, q, &config.derived(VOLUME_STREAM));
    Ok(times_volume(&m, &volume, config.seed, saturated))
}

/// Exact law of `ψ_I` at a uniform point.
///
/// `ψ = -Σ_{j=1..p} ln B_j` with independent `B_j ~ Beta(j, q)`. The first
/// term `u = -ln B_1` has density `q e^{-u}(1-e^{-u})^{q-1}`; with a tilt
/// `γ` it is drawn from the mixture `½ law + ½ Exp(γ)` and reweighted, which
/// reaches the far tail of `ψ` where the extremal family concentrates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiLaw {
    p: usize,
    q: usize,
    tilt: Option<f64>,
}

impl PsiLaw {
    pub fn new(p: usize, q: usize, tilt: Option<f64>) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(GeometryError::Dimension(format!("p and q must be positive, got ({p}, {q})")));
        }
        if let Some(g) = tilt {
            if !(g > 0.0 && g < 1.0) {
                return Err(GeometryError::InvalidArgument(format!("tilt must lie in (0, 1), got {g}")));
            }
        }
        Ok(Self { p, q, tilt })
    }

    pub fn tilt(&self) -> Option<f64> {
        self.tilt
    }

    fn first_term_density(&self, u: f64) -> f64 {
        let q = self.q as f64;
        q * (-u).exp() * (-(-u).exp_m1()).powf(q - 1.0)
    }

    /// One draw of `(ψ, importance weight)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let q = self.q as f64;
        let from_law = |rng: &mut R| -(-rng.random::<f64>().powf(1.0 / q)).ln_1p();
        let (u, weight) = match self.tilt {
            None => (from_law(rng), 1.0),
            Some(g) => {
                let u = if rng.random::<bool>() { from_law(rng) } else { Exp::new(g).expect("positive rate").sample(rng) };
                let t = self.first_term_density(u);
                (u, t / (0.5 * t + 0.5 * g * (-g * u).exp()))
            }
        };
        let rest: f64 = (2..=self.p).map(|j| -Beta::new(j as f64, q).expect("positive shapes").sample(rng).ln()).sum();
        (u + rest, weight)
    }
}

/// `V · E[e^{-α f(ψ)}]` with `ψ` drawn from `law`.
pub fn mc_integral_psi_law<F>(alpha: f64, profile: F, law: &PsiLaw, config: &McConfig) -> Result<IntegralEstimate>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    check_alpha(alpha)?;
    let parts = shard_map(config, |seed, n| {
        let mut rng = rng_from_seed(seed);
        let mut m = Moments::default();
        let mut saturated = false;
        for _ in 0..n {
            let (x, w) = law.sample(&mut rng);
            let (v, s) = guarded_exp(-alpha * profile(x), config.truncation);
            saturated |= s;
            m.push(w * v);
        }
        (m, saturated)
    });
    let saturated = parts.iter().any(|x| x.1);
    let m = merge_all(&parts.iter().map(|x| x.0).collect::<Vec<_>>());
    let volume = total_volume(law.p, law.q, &config.derived(VOLUME_STREAM));
    Ok(times_volume(&m, &volume, config.seed, saturated))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ScanEstimator {
    /// Uniform points, `ψ` evaluated on each.
    Uniform,
    /// Draws from [`PsiLaw`] with the given tilt.
    PsiLaw { tilt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// `c` in the rescaled pair `(c·g, c·φ)`.
    pub metric_scale: f64,
    pub estimator: ScanEstimator,
    pub form: ExtremalForm,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { metric_scale: 1.0, estimator: ScanEstimator::PsiLaw { tilt: 0.03 }, form: ExtremalForm::ExactMax }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Bounded,
    Growing,
    Inconclusive,
}

impl Verdict {
    /// `GROWING` if the last estimate is at least 10× the first, otherwise
    /// `BOUNDED` if the top half of the row varies by less than 2×.
    pub fn classify(row: &[f64]) -> Verdict {
        let (Some(&first), Some(&last)) = (row.first(), row.last()) else {
            return Verdict::Inconclusive;
        };
        if last >= 10.0 * first {
            return Verdict::Growing;
        }
        let top = &row[row.len() / 2..];
        let max = top.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = top.iter().cloned().fold(f64::INFINITY, f64::min);
        if min > 0.0 && max < 2.0 * min {
            Verdict::Bounded
        } else {
            Verdict::Inconclusive
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaScan {
    pub p: usize,
    pub q: usize,
    pub alphas: Vec<f64>,
    pub ns: Vec<u32>,
    pub options: ScanOptions,
    /// `cells[i][k]` estimates `∫ e^{-α_i c φ_{n_k}} d(c^{pq} V)`.
    pub cells: Vec<Vec<IntegralEstimate>>,
    pub verdicts: Vec<Verdict>,
    /// Midpoint between the largest bounded and the smallest growing `α`.
    pub threshold: Option<f64>,
}

/// Threshold under the rescaled metric `c·g`: `α(c·ω) = α(ω)/c`.
pub fn scaled_alpha_threshold(threshold: f64, c: f64) -> f64 {
    threshold / c
}

/// Table of `∫ e^{-αφ_n}` for every `(α, n)`, all cells sharing one sample set.
pub fn alpha_scan(p: usize, q: usize, alphas: &[f64], ns: &[u32], config: &McConfig, options: &ScanOptions) -> Result<AlphaScan> {
    if alphas.is_empty() || ns.is_empty() {
        return Err(GeometryError::InvalidArgument("alpha and n lists must be nonempty".into()));
    }
    for &a in alphas {
        check_alpha(a)?;
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(GeometryError::InvalidArgument("n list must be strictly increasing".into()));
    }
    let c = options.metric_scale;
    if !(c > 0.0 && c.is_finite()) {
        return Err(GeometryError::InvalidArgument(format!("metric scale must be positive, got {c}")));
    }
    let chart = IndexSet::leading(p, q);
    let families = ns.iter().map(|&n| ExtremalFamily::new(chart.clone(), n, options.form)).collect::<Result<Vec<_>>>()?;
    let law = match options.estimator {
        ScanEstimator::PsiLaw { tilt } => Some(PsiLaw::new(p, q, Some(tilt))?),
        ScanEstimator::Uniform => None,
    };
    let cells_len = alphas.len() * families.len();
    let parts = shard_map(config, |seed, n| {
        let mut rng = rng_from_seed(seed);
        let mut acc = vec![Moments::default(); cells_len];
        let mut saturated = vec![false; cells_len];
        let mut profiles = vec![0.0; families.len()];
        for _ in 0..n {
            let (x, w) = match &law {
                Some(law) => law.sample(&mut rng),
                None => (psi(&chart, &sample_grassmann_with(p, q, &mut rng)), 1.0),
            };
            for (k, fam) in families.iter().enumerate() {
                profiles[k] = fam.profile(x);
            }
            for (i, &a) in alphas.iter().enumerate() {
                for (k, f) in profiles.iter().enumerate() {
                    let (v, s) = guarded_exp(-a * c * f, config.truncation);
                    let cell = i * families.len() + k;
                    saturated[cell] |= s;
                    acc[cell].push(w * v);
                }
            }
        }
        (acc, saturated)
    });
    let volume = total_volume(p, q, &config.derived(VOLUME_STREAM)).scaled(c.powi((p * q) as i32));
    let mut cells = Vec::with_capacity(alphas.len());
    for i in 0..alphas.len() {
        let row = (0..families.len())
            .map(|k| {
                let cell = i * families.len() + k;
                let m = parts.iter().fold(Moments::default(), |acc, part| acc.merge(&part.0[cell]));
                let sat = parts.iter().any(|part| part.1[cell]);
                times_volume(&m, &volume, config.seed, sat)
            })
            .collect::<Vec<_>>();
        cells.push(row);
    }
    let verdicts: Vec<Verdict> = cells.iter().map(|row| Verdict::classify(&row.iter().map(|e| e.mean).collect::<Vec<_>>())).collect();
    let threshold = threshold_estimate(alphas, &verdicts);
    Ok(AlphaScan { p, q, alphas: alphas.to_vec(), ns: ns.to_vec(), options: *options, cells, verdicts, threshold })
}

fn threshold_estimate(alphas: &[f64], verdicts: &[Verdict]) -> Option<f64> {
    let bounded = alphas.iter().zip(verdicts).filter(|v| *v.1 == Verdict::Bounded).map(|v| *v.0);
    let growing = alphas.iter().zip(verdicts).filter(|v| *v.1 == Verdict::Growing).map(|v| *v.0);
    let lo = bounded.fold(f64::NEG_INFINITY, f64::max);
    let hi = growing.fold(f64::INFINITY, f64::min);
    (lo.is_finite() && hi.is_finite() && lo < hi).then_some(0.5 * (lo + hi))
}
