//! Embedding of `(P¹)ᵖ` into `G(p, q)` for `p ≤ q`, parametrised by the
//! off-diagonal entries `w`, and the estimates built on it.
//!
//! At `λ = 1` the embedded representative is `[Id_p; Z]` with
//! `Z[a][j] = μ_j` on the diagonal `a = j` and `w[a][j]` elsewhere, so
//! `(w, μ)` is just a relabelling of the coordinates of the leading chart.

use num_complex::Complex64;
use rand::Rng;

use crate::atlas::{to_chart, GrassmannPoint};
use crate::error::{GeometryError, Result};
use crate::estimate::IntegralEstimate;
use crate::linalg::random::complex_normal;
use crate::linalg::{det, hermitian_eigenvalues, CMatrix, IndexSet};
use crate::metric::{hermitian_hessian, metric_closed_form, potential, AdmissibilityReport, HESSIAN_STEP};
use crate::quadrature::trapezoid_decaying;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Off-diagonal parameters `w[a][j]`, `0 ≤ a < q`, `0 ≤ j < p`, `a ≠ j`.
#[derive(Debug, Clone, PartialEq)]
pub struct WParam {
    p: usize,
    q: usize,
    // q×p, diagonal unused and kept at zero
    entries: CMatrix,
}

impl WParam {
    pub fn zeros(p: usize, q: usize) -> Result<Self> {
        if p == 0 || p > q {
            return Err(GeometryError::RequiresPNotAboveQ { p, q });
        }
        Ok(Self { p, q, entries: CMatrix::zeros(q, p) })
    }

    /// Number of free entries, `p(q - 1)`.
    pub fn len(p: usize, q: usize) -> usize {
        p * (q - 1)
    }

    /// Entries in lexicographic `(a, j)` order, skipping `a = j`.
    pub fn new(p: usize, q: usize, values: &[Complex64]) -> Result<Self> {
        let mut w = Self::zeros(p, q)?;
        if values.len() != Self::len(p, q) {
            return Err(GeometryError::Dimension(format!("{} w entries, expected {}", values.len(), Self::len(p, q))));
        }
        for (slot, &v) in w.slots().into_iter().zip(values) {
            w.entries[slot] = v;
        }
        Ok(w)
    }

    pub fn random<R: Rng + ?Sized>(p: usize, q: usize, scale: f64, rng: &mut R) -> Result<Self> {
        let values: Vec<Complex64> = (0..Self::len(p, q)).map(|_| complex_normal(rng) * scale).collect();
        Self::new(p, q, &values)
    }

    fn slots(&self) -> Vec<(usize, usize)> {
        (0..self.q).flat_map(|a| (0..self.p).map(move |j| (a, j))).filter(|(a, j)| a != j).collect()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, a: usize, j: usize) -> Complex64 {
        if a == j {
            ZERO
        } else {
            self.entries[(a, j)]
        }
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.slots().into_iter().map(|s| self.entries[s]).collect()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.frobenius_norm().powi(2)
    }
}

/// A point of `(C² \ 0)ᵖ`, one homogeneous pair `(λ_k, μ_k)` per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    pairs: Vec<(Complex64, Complex64)>,
}

impl ProductPoint {
    pub fn new(pairs: Vec<(Complex64, Complex64)>) -> Result<Self> {
        if let Some(k) = pairs.iter().position(|&(l, m)| l == ZERO && m == ZERO) {
            return Err(GeometryError::DegeneratePair(k));
        }
        Ok(Self { pairs })
    }

    /// The affine chart `λ_1 = ... = λ_p = 1`.
    pub fn affine(mu: &[Complex64]) -> Self {
        Self { pairs: mu.iter().map(|&m| (ONE, m)).collect() }
    }

    /// `([0, 1], ..., [0, 1])`.
    pub fn at_infinity(p: usize) -> Self {
        Self { pairs: vec![(ZERO, ONE); p] }
    }

    pub fn pairs(&self) -> &[(Complex64, Complex64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Per-factor rescaling by the structure group `(C*)ᵖ`.
    pub fn rescale(&self, t: &[Complex64]) -> Result<Self> {
        if t.len() != self.pairs.len() || t.contains(&ZERO) {
            return Err(GeometryError::InvalidArgument("one nonzero scale per factor required".into()));
        }
        Ok(Self { pairs: self.pairs.iter().zip(t).map(|(&(l, m), &s)| (l * s, m * s)).collect() })
    }
}

/// The `(p+q)×p` matrix: `λ_i δ_ij` on the first `p` rows; below, `μ_j` on
/// the shifted diagonal and `w[a][j] λ_j` elsewhere.
pub fn rho_tilde(w: &WParam, pt: &ProductPoint) -> Result<CMatrix> {
    let (p, q) = (w.p, w.q);
    if pt.len() != p {
        return Err(GeometryError::Dimension(format!("{} factors for p = {p}", pt.len())));
    }
    ProductPoint::new(pt.pairs.clone())?;
    let pairs = &pt.pairs;
    Ok(CMatrix::from_fn(p + q, p, |i, j| {
        if i < p {
            if i == j {
                pairs[i].0
            } else {
                ZERO
            }
        } else {
            let a = i - p;
            if a == j {
                pairs[j].1
            } else {
                w.get(a, j) * pairs[j].0
            }
        }
    }))
}

pub fn rho(w: &WParam, pt: &ProductPoint) -> Result<GrassmannPoint> {
    GrassmannPoint::new(rho_tilde(w, pt)?)
}

/// Leading-chart coordinate of the image of `(w, μ)` at `λ = 1`.
pub fn affine_chart_coordinates(w: &WParam, mu: &[Complex64]) -> Result<CMatrix> {
    if mu.len() != w.p {
        return Err(GeometryError::Dimension(format!("{} μ entries for p = {}", mu.len(), w.p)));
    }
    Ok(CMatrix::from_fn(w.q, w.p, |a, j| if a == j { mu[j] } else { w.get(a, j) }))
}

/// Inverse of [`affine_chart_coordinates`].
pub fn split_affine_coordinates(z: &CMatrix) -> Result<(WParam, Vec<Complex64>)> {
    let (q, p) = (z.rows(), z.cols());
    let mut w = WParam::zeros(p, q)?;
    for (a, j) in w.slots() {
        w.entries[(a, j)] = z[(a, j)];
    }
    Ok((w, (0..p).map(|j| z[(j, j)]).collect()))
}

/// `det(ρ̃ᵀ ρ̃̄)` at `λ = 1`, i.e. `F` of the leading chart at the image point.
pub fn gram_det(w: &WParam, mu: &[Complex64]) -> Result<f64> {
    let m = rho_tilde(w, &ProductPoint::affine(mu))?;
    Ok(det(&m.gram())?.re)
}

/// `Φ = det(ρ̃ᵀ ρ̃̄) / Π_k (|λ_k|² + |μ_k|²)`; invariant under `(C*)ᵖ`.
pub fn phi_factor(w: &WParam, pt: &ProductPoint) -> Result<f64> {
    let m = rho_tilde(w, pt)?;
    let denom: f64 = pt.pairs.iter().map(|(l, m)| l.norm_sqr() + m.norm_sqr()).product();
    Ok(det(&m.gram())?.re / denom)
}

/// The two lower bounds on the Gram determinant at `λ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramBounds {
    pub gram_det: f64,
    /// `max_k (1 + |μ_k|²)`.
    pub max_mu_bound: f64,
    /// `1 + ‖w‖²`.
    pub w_bound: f64,
}

impl GramBounds {
    pub fn holds(&self, slack: f64) -> bool {
        self.max_mu_bound <= self.gram_det * (1.0 + slack) && self.w_bound <= self.gram_det * (1.0 + slack)
    }
}

pub fn gram_bounds(w: &WParam, mu: &[Complex64]) -> Result<GramBounds> {
    Ok(GramBounds {
        gram_det: gram_det(w, mu)?,
        max_mu_bound: mu.iter().map(|m| 1.0 + m.norm_sqr()).fold(0.0, f64::max),
        w_bound: 1.0 + w.norm_sq(),
    })
}

/// Logarithms of both sides of
/// `Π_k (1+|μ_k|²)^{2-α} / G^{κ+p+q-α} ≤ (1+‖w‖²)^{-κ}`, `G` the Gram determinant.
pub fn combined_bound_logs(w: &WParam, mu: &[Complex64], alpha: f64, kappa: f64) -> Result<(f64, f64)> {
    let (p, q) = (w.p as f64, w.q as f64);
    let g = gram_det(w, mu)?;
    let lhs = mu.iter().map(|m| (2.0 - alpha) * m.norm_sqr().ln_1p()).sum::<f64>() - (kappa + p + q - alpha) * g.ln();
    let rhs = -kappa * w.norm_sq().ln_1p();
    Ok((lhs, rhs))
}

fn mu_row(mu: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(1, mu.len(), |_, j| mu[j])
}

/// Largest component of `H(log F∘ρ_w) − [H(log Φ) + ⊕ FS₁]` in the `μ`
/// coordinates, both sides from [`hermitian_hessian`] with step `h`.
pub fn pullback_residual(w: &WParam, mu: &[Complex64], h: f64) -> Result<f64> {
    let p = w.p;
    let chart = IndexSet::leading(p, w.q);
    let image = rho(w, &ProductPoint::affine(mu))?;
    to_chart(&image, &chart)?;

    let pulled_back = |m: &CMatrix| {
        let pt = ProductPoint::affine(m.as_slice());
        match rho(w, &pt).and_then(|g| to_chart(&g, &chart)) {
            Ok(c) => potential(c.z()),
            Err(_) => f64::NAN,
        }
    };
    let log_phi = |m: &CMatrix| phi_factor(w, &ProductPoint::affine(m.as_slice())).map(f64::ln).unwrap_or(f64::NAN);

    let at = mu_row(mu);
    let lhs = hermitian_hessian(pulled_back, &at, h)?;
    let mut rhs = hermitian_hessian(log_phi, &at, h)?;
    for (k, m) in mu.iter().enumerate() {
        rhs[(k, k)] += Complex64::new((1.0 + m.norm_sqr()).powi(-2), 0.0);
    }
    if !lhs.is_finite() || !rhs.is_finite() {
        return Err(GeometryError::InvalidArgument("pullback left the leading chart".into()));
    }
    Ok((&lhs - &rhs).max_abs())
}

pub fn pullback_residual_default(w: &WParam, mu: &[Complex64]) -> Result<f64> {
    pullback_residual(w, mu, HESSIAN_STEP)
}

/// `(m₁, m₂) ↦ φ(m₁)`.
pub fn product_extension<F>(phi: F) -> impl Fn(&GrassmannPoint, &GrassmannPoint) -> f64 + Sync
where
    F: Fn(&GrassmannPoint) -> f64 + Sync,
{
    move |m1: &GrassmannPoint, _m2: &GrassmannPoint| phi(m1)
}

/// Admissibility of a function on `M₁ × M₂` for the product metric
/// `g₁ ⊕ g₂`, evaluated in the best chart of each factor.
pub fn product_admissibility<F>(psi: &F, points: &[(GrassmannPoint, GrassmannPoint)], tol: f64) -> AdmissibilityReport
where
    F: Fn(&GrassmannPoint, &GrassmannPoint) -> f64,
{
    let mut report = AdmissibilityReport { min_eigenvalues: Vec::new(), skipped: Vec::new(), tol };
    for (idx, (m1, m2)) in points.iter().enumerate() {
        match product_margin(psi, m1, m2) {
            Ok(v) => report.min_eigenvalues.push(v),
            Err(e) => report.skipped.push((idx, e.to_string())),
        }
    }
    report
}

fn product_margin<F>(psi: &F, m1: &GrassmannPoint, m2: &GrassmannPoint) -> Result<f64>
where
    F: Fn(&GrassmannPoint, &GrassmannPoint) -> f64,
{
    let (c1, c2) = (m1.best_chart(), m2.best_chart());
    let (z1, z2) = (to_chart(m1, &c1)?, to_chart(m2, &c2)?);
    let (d1, d2) = (z1.z().rows() * z1.z().cols(), z2.z().rows() * z2.z().cols());
    let joint = CMatrix::from_fn(1, d1 + d2, |_, k| if k < d1 { z1.z().as_slice()[k] } else { z2.z().as_slice()[k - d1] });
    let unpack = |v: &CMatrix| -> Result<(GrassmannPoint, GrassmannPoint)> {
        let a = CMatrix::from_row_major(z1.z().rows(), z1.z().cols(), v.as_slice()[..d1].to_vec())?;
        let b = CMatrix::from_row_major(z2.z().rows(), z2.z().cols(), v.as_slice()[d1..].to_vec())?;
        Ok((
            crate::atlas::from_chart(&crate::atlas::ChartCoordinates::new(c1.clone(), a)?),
            crate::atlas::from_chart(&crate::atlas::ChartCoordinates::new(c2.clone(), b)?),
        ))
    };
    let f = |v: &CMatrix| unpack(v).map(|(a, b)| psi(&a, &b)).unwrap_or(f64::NAN);
    let hess = hermitian_hessian(f, &joint, HESSIAN_STEP)?;
    let (g1, g2) = (metric_closed_form(z1.z()), metric_closed_form(z2.z()));
    let form = CMatrix::from_fn(d1 + d2, d1 + d2, |r, s| {
        let g = if r < d1 && s < d1 {
            g1[(r, s)]
        } else if r >= d1 && s >= d1 {
            g2[(r - d1, s - d1)]
        } else {
            ZERO
        };
        g + hess[(r, s)]
    });
    Ok(hermitian_eigenvalues(&form)?[0])
}

/// `∫_{C^d} (1 + ‖w‖²)^{-κ} dLeb`, finite iff `κ > d`.
///
/// Reduced to `π^d/(d-1)! ∫ s^{d-1} (1+s)^{-κ} ds` and integrated in
/// `u = log s` with the trapezoidal rule.
pub fn w_tail_integral(kappa: f64, d: usize) -> IntegralEstimate {
    if d == 0 {
        return IntegralEstimate { mean: 1.0, std_error: 0.0, samples: 1, seed: 0, divergent: false, saturated: false };
    }
    let df = d as f64;
    if kappa <= df {
        return IntegralEstimate::divergent(0);
    }
    let integrand = |u: f64| {
        let softplus = if u > 0.0 { u + (-u).exp().ln_1p() } else { u.exp().ln_1p() };
        (df * u - kappa * softplus).exp()
    };
    // integrand ~ e^{du} on the left and e^{(d-κ)u} on the right
    let lo = -45.0 / df;
    let hi = 45.0 / (kappa - df) + 5.0;
    let (radial, change, evals) = trapezoid_decaying(integrand, lo, hi, 1e-14);
    let factorial: f64 = (1..d).map(|k| k as f64).product();
    let prefactor = std::f64::consts::PI.powi(d as i32) / factorial;
    IntegralEstimate {
        mean: prefactor * radial,
        std_error: prefactor * change,
        samples: evals,
        seed: 0,
        divergent: false,
        saturated: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{canonical_point, numerical_jacobian_det_sq, JACOBIAN_STEP};
    use crate::linalg::random::rng_from_seed;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn w_domain() {
        assert!(WParam::zeros(3, 2).is_err());
        assert_eq!(WParam::len(2, 3), 4);
        let w = WParam::new(2, 3, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]).unwrap();
        // slots (0,1), (1,0), (2,0), (2,1)
        assert_eq!(w.get(0, 1), c(1.0, 0.0));
        assert_eq!(w.get(1, 0), c(2.0, 0.0));
        assert_eq!(w.get(2, 1), c(4.0, 0.0));
        assert_eq!(w.get(1, 1), ZERO);
        assert_eq!(w.norm_sq(), 30.0);
    }

    #[test]
    fn points_at_infinity_map_to_a_canonical_point() {
        for (p, q) in [(1, 1), (2, 2), (2, 3)] {
            let mut rng = rng_from_seed(3);
            let w = WParam::random(p, q, 1.0, &mut rng).unwrap();
            let image = rho(&w, &ProductPoint::at_infinity(p)).unwrap();
            let rows: Vec<usize> = (p + 1..=2 * p).collect();
            let target = canonical_point(&IndexSet::from_one_based(p, q, &rows).unwrap());
            assert!(image.approx_eq(&target, 1e-12));
            assert!((phi_factor(&w, &ProductPoint::at_infinity(p)).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_pairs_are_rejected() {
        let w = WParam::zeros(1, 2).unwrap();
        let bad = ProductPoint { pairs: vec![(ZERO, ZERO)] };
        assert_eq!(rho_tilde(&w, &bad), Err(GeometryError::DegeneratePair(0)));
    }

    #[test]
    fn gram_det_small_cases() {
        let w = WParam::zeros(1, 1).unwrap();
        let mu = [c(0.6, -0.8)];
        assert!((gram_det(&w, &mu).unwrap() - 2.0).abs() < 1e-14);

        let w = WParam::new(1, 2, &[c(0.3, 0.4)]).unwrap();
        let m = rho_tilde(&w, &ProductPoint::affine(&[c(2.0, 0.0)])).unwrap();
        assert_eq!(m.as_slice(), &[ONE, c(2.0, 0.0), c(0.3, 0.4)]);
        assert!((gram_det(&w, &[c(2.0, 0.0)]).unwrap() - (1.0 + 4.0 + 0.25)).abs() < 1e-14);

        let w = WParam::zeros(2, 3).unwrap();
        let mu = [c(1.0, 1.0), c(0.0, 3.0)];
        assert!((gram_det(&w, &mu).unwrap() - 3.0 * 10.0).abs() < 1e-12);
        assert!((phi_factor(&w, &ProductPoint::affine(&mu)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn phi_is_invariant_under_the_structure_group() {
        let mut rng = rng_from_seed(11);
        for _ in 0..20 {
            let w = WParam::random(2, 3, 1.0, &mut rng).unwrap();
            let pt = ProductPoint::new(vec![(complex_normal(&mut rng), complex_normal(&mut rng)); 2]).unwrap();
            let pt = ProductPoint::new(vec![pt.pairs[0], (complex_normal(&mut rng), complex_normal(&mut rng))]).unwrap();
            let t = [complex_normal(&mut rng), complex_normal(&mut rng)];
            let a = phi_factor(&w, &pt).unwrap();
            let b = phi_factor(&w, &pt.rescale(&t).unwrap()).unwrap();
            assert!((a - b).abs() <= 1e-10 * a);
        }
    }

    #[test]
    fn pullback_on_p1_is_fubini_study() {
        let w = WParam::zeros(1, 1).unwrap();
        for mu in [c(0.0, 0.0), c(0.4, -1.1), c(2.0, 0.5)] {
            assert!(pullback_residual_default(&w, &[mu]).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn pullback_with_zero_w() {
        let w = WParam::zeros(2, 3).unwrap();
        assert!(pullback_residual_default(&w, &[c(0.5, 0.2), c(-1.0, 0.3)]).unwrap() <= 1e-6);
    }

    #[test]
    fn affine_relabelling_round_trips_with_unit_jacobian() {
        let mut rng = rng_from_seed(5);
        let w = WParam::random(2, 3, 1.0, &mut rng).unwrap();
        let mu = [complex_normal(&mut rng), complex_normal(&mut rng)];
        let z = affine_chart_coordinates(&w, &mu).unwrap();
        let (w2, mu2) = split_affine_coordinates(&z).unwrap();
        assert_eq!((w2, mu2), (w.clone(), mu.to_vec()));
        // the chart coordinate of the image is exactly z
        let image = rho(&w, &ProductPoint::affine(&mu)).unwrap();
        let chart_z = to_chart(&image, &IndexSet::leading(2, 3)).unwrap();
        assert!((chart_z.z() - &z).max_abs() < 1e-14);
        // (w, μ) packed as one row; the map to Z is a permutation
        let mut packed = w.values();
        packed.extend_from_slice(&mu);
        let packed = CMatrix::from_fn(1, packed.len(), |_, k| packed[k]);
        let relabel = |v: &CMatrix| {
            let n = WParam::len(2, 3);
            let w = WParam::new(2, 3, &v.as_slice()[..n])?;
            let z = affine_chart_coordinates(&w, &v.as_slice()[n..])?;
            CMatrix::from_row_major(1, z.as_slice().len(), z.as_slice().to_vec())
        };
        let jac = numerical_jacobian_det_sq(relabel, &packed, JACOBIAN_STEP).unwrap();
        assert!((jac - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn w_tail_examples() {
        let v = w_tail_integral(2.0, 1);
        assert!(!v.divergent);
        assert!((v.mean - std::f64::consts::PI).abs() < 1e-6);
        assert!(w_tail_integral(1.0, 1).divergent);
        assert!(w_tail_integral(0.5, 2).divergent);
        assert_eq!(w_tail_integral(0.3, 0).mean, 1.0);
    }

    #[test]
    fn product_extension_ignores_the_second_factor() {
        let phi = |m: &GrassmannPoint| m.rep()[(0, 0)].norm();
        let psi = product_extension(phi);
        let a = GrassmannPoint::new(CMatrix::from_real_rows(&[&[2.0], &[1.0]])).unwrap();
        let b = GrassmannPoint::new(CMatrix::from_real_rows(&[&[0.0], &[1.0]])).unwrap();
        assert_eq!(psi(&a, &b), 2.0);
        let zero = product_extension(|_: &GrassmannPoint| 0.0);
        let report = product_admissibility(&zero, &[(a, b)], 1e-9);
        assert!(report.admissible());
    }
}
