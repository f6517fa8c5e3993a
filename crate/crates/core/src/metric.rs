//! The canonical Kähler metric of the Grassmannian in affine coordinates.
//!
//! In the chart of an index set `I` with coordinate `Z` (q×p) the metric is
//! `i∂∂̄ log F(Z)` with `F(Z) = det(Id + Zᵀ Z̄)`. Components are indexed by
//! the row-major flattening `t(a, j) = a·p + j` of `Z`.
//!
//! Everything here exists in two forms: a closed form, and the same
//! quantity obtained from [`hermitian_hessian`] applied to a scalar function.
//! The finite-difference path is the oracle for the closed form.

use std::ops::Deref;

use num_complex::Complex64;

use crate::atlas::{from_chart, to_chart, ChartCoordinates, GrassmannPoint};
use crate::error::{GeometryError, Result};
use crate::linalg::{det, hermitian_eigenvalues, inverse, CMatrix, IndexSet};

/// Default finite-difference step for [`hermitian_hessian`].
pub const HESSIAN_STEP: f64 = 1e-3;
/// Relative disagreement between the `h` and `h/2` Hessians that is treated as cancellation.
pub const HESSIAN_CANCELLATION_RTOL: f64 = 1e-3;

/// A real function on the Grassmannian.
pub trait ScalarField: Sync {
    fn value(&self, pt: &GrassmannPoint) -> f64;
}

impl<F> ScalarField for F
where
    F: Fn(&GrassmannPoint) -> f64 + Sync,
{
    fn value(&self, pt: &GrassmannPoint) -> f64 {
        self(pt)
    }
}

/// The field read in the coordinates of `chart`.
pub fn in_chart<'a, S: ScalarField + ?Sized>(field: &'a S, chart: &'a IndexSet) -> impl Fn(&CMatrix) -> f64 + 'a {
    move |z: &CMatrix| {
        let c = ChartCoordinates::new(chart.clone(), z.clone()).expect("coordinate shape fixed by the chart");
        field.value(&from_chart(&c))
    }
}

macro_rules! hermitian_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(CMatrix);

        impl $name {
            pub fn new(components: CMatrix) -> Result<Self> {
                components.require_square()?;
                Ok(Self(components))
            }

            pub fn components(&self) -> &CMatrix {
                &self.0
            }

            pub fn into_inner(self) -> CMatrix {
                self.0
            }

            pub fn dim(&self) -> usize {
                self.0.rows()
            }
        }

        impl Deref for $name {
            type Target = CMatrix;

            fn deref(&self) -> &CMatrix {
                &self.0
            }
        }
    };
}

hermitian_newtype!(
    /// Components `g_{λμ̄}` of the metric in chart coordinates.
    MetricTensor
);
hermitian_newtype!(
    /// Components `R_{λμ̄} = -∂_λ ∂̄_μ log det g`.
    RicciTensor
);

/// `F(Z) = det(Id_p + Zᵀ Z̄)`, always ≥ 1.
pub fn chart_f(z: &CMatrix) -> f64 {
    let p = z.cols();
    let inner = &CMatrix::identity(p) + &z.gram();
    det(&inner).expect("square").re
}

/// Kähler potential `log F(Z)`.
pub fn potential(z: &CMatrix) -> f64 {
    chart_f(z).ln()
}

fn hessian_at_step<F: Fn(&CMatrix) -> f64>(f: &F, z: &CMatrix, h: f64) -> CMatrix {
    let d = z.rows() * z.cols();
    let n = 2 * d;
    let f0 = f(z);
    let shift = |moves: &[(usize, f64)]| {
        let mut w = z.clone();
        for &(k, s) in moves {
            let slot = &mut w.as_mut_slice()[k / 2];
            if k % 2 == 0 {
                slot.re += s;
            } else {
                slot.im += s;
            }
        }
        f(&w)
    };
    // real Hessian over (x_0, y_0, x_1, y_1, ...)
    let mut real = vec![0.0; n * n];
    for a in 0..n {
        real[a * n + a] = (shift(&[(a, h)]) - 2.0 * f0 + shift(&[(a, -h)])) / (h * h);
        for b in (a + 1)..n {
            let v = (shift(&[(a, h), (b, h)]) - shift(&[(a, h), (b, -h)]) - shift(&[(a, -h), (b, h)]) + shift(&[(a, -h), (b, -h)]))
                / (4.0 * h * h);
            real[a * n + b] = v;
            real[b * n + a] = v;
        }
    }
    let at = |a: usize, b: usize| real[a * n + b];
    let g = CMatrix::from_fn(d, d, |l, m| {
        let (xl, yl, xm, ym) = (2 * l, 2 * l + 1, 2 * m, 2 * m + 1);
        Complex64::new(at(xl, xm) + at(yl, ym), at(xl, ym) - at(yl, xm)) * 0.25
    });
    g.hermitian_part().expect("square")
}

/// `∂²f/∂z^λ∂z̄^μ` by central differences with one Richardson pass.
///
/// `g_{λμ̄} = ¼[(∂_{x_λ x_μ} + ∂_{y_λ y_μ}) f + i(∂_{x_λ y_μ} − ∂_{y_λ x_μ}) f]`,
/// symmetrised to be exactly Hermitian. Fails when the `h` and `h/2`
/// estimates disagree by more than [`HESSIAN_CANCELLATION_RTOL`].
pub fn hermitian_hessian<F: Fn(&CMatrix) -> f64>(f: F, z: &CMatrix, h: f64) -> Result<CMatrix> {
    let scale = z.max_abs().max(1.0);
    if !(h >= 1e-7 * scale) {
        return Err(GeometryError::StepUnderflow(h));
    }
    let coarse = hessian_at_step(&f, z, h);
    let fine = hessian_at_step(&f, z, h / 2.0);
    let diff = (&fine - &coarse).frobenius_norm();
    let size = fine.frobenius_norm();
    if diff > 1e-9 && diff > HESSIAN_CANCELLATION_RTOL * size {
        return Err(GeometryError::Cancellation(diff / size.max(f64::MIN_POSITIVE)));
    }
    Ok(&fine.scale_real(4.0 / 3.0) - &coarse.scale_real(1.0 / 3.0))
}

/// Closed-form metric: `g_{t(a,j), t(b,l)} = B_{ba} C_{jl}` with
/// `B = (Id_q + Z Z†)⁻¹` and `C = (Id_p + Z† Z)⁻¹`.
pub fn metric_closed_form(z: &CMatrix) -> MetricTensor {
    let (q, p) = (z.rows(), z.cols());
    let b = inverse(&(&CMatrix::identity(q) + &(z * &z.adjoint()))).expect("Id + ZZ† is positive definite");
    let c = inverse(&(&CMatrix::identity(p) + &(&z.adjoint() * z))).expect("Id + Z†Z is positive definite");
    let g = CMatrix::from_fn(p * q, p * q, |r, s| {
        let (a, j) = (r / p, r % p);
        let (bb, l) = (s / p, s % p);
        b[(bb, a)] * c[(j, l)]
    });
    MetricTensor(g)
}

/// Metric from finite differences of the potential.
pub fn metric_finite_difference(z: &CMatrix) -> Result<MetricTensor> {
    Ok(MetricTensor(hermitian_hessian(potential, z, HESSIAN_STEP)?))
}

/// `λ_I(Z) = F(Z)^{-(p+q)}`, the density of the volume form in the chart.
pub fn volume_density(z: &CMatrix) -> f64 {
    chart_f(z).powi(-((z.rows() + z.cols()) as i32))
}

/// Determinant of the closed-form metric.
pub fn det_metric(z: &CMatrix) -> f64 {
    det(&metric_closed_form(z)).expect("square").re
}

/// `-∂∂̄ log det g` by finite differences of the closed-form determinant.
pub fn ricci(z: &CMatrix) -> Result<RicciTensor> {
    let h = hermitian_hessian(|w: &CMatrix| det_metric(w).ln(), z, HESSIAN_STEP)?;
    Ok(RicciTensor(-&h))
}

/// `(p+q) ∂∂̄ log F`, the Ricci tensor predicted by `det g = F^{-(p+q)}`.
pub fn ricci_via_potential(z: &CMatrix) -> Result<RicciTensor> {
    let k = (z.rows() + z.cols()) as f64;
    Ok(RicciTensor(hermitian_hessian(potential, z, HESSIAN_STEP)?.scale_real(k)))
}

/// `‖R - (p+q) g‖_F / ‖g‖_F` with `R` from [`ricci`] and `g` closed form.
pub fn einstein_residual(z: &CMatrix) -> Result<f64> {
    let g = metric_closed_form(z);
    let k = (z.rows() + z.cols()) as f64;
    let r = ricci(z)?;
    Ok((&*r - &g.scale_real(k)).frobenius_norm() / g.frobenius_norm())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    /// Smallest eigenvalue of `c·g + ∂∂̄φ` at each evaluated point, in input order.
    pub min_eigenvalues: Vec<f64>,
    /// `(point index, reason)` for points that could not be evaluated.
    pub skipped: Vec<(usize, String)>,
    pub tol: f64,
}

impl AdmissibilityReport {
    pub fn min_margin(&self) -> f64 {
        self.min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Every evaluated point has `min eigenvalue > -tol`.
    pub fn admissible(&self) -> bool {
        !self.min_eigenvalues.is_empty() && self.min_margin() > -self.tol
    }
}

/// Smallest eigenvalue of `metric_scale·g + ∂∂̄φ`, evaluated in the best chart of `pt`.
///
/// The Hessian step starts at [`HESSIAN_STEP`] and is divided by 4 while
/// the Richardson check reports cancellation, down to about `HESSIAN_STEP/100`.
///
/// Positivity of this form does not depend on the chart, so the chart with
/// the largest maximal minor (coordinates bounded by 1) is used.
pub fn admissibility_margin<S: ScalarField + ?Sized>(phi: &S, pt: &GrassmannPoint, metric_scale: f64) -> Result<f64> {
    let chart = pt.best_chart();
    let c = to_chart(pt, &chart)?;
    let g = metric_closed_form(c.z()).into_inner().scale_real(metric_scale);
    let field = in_chart(phi, &chart);
    // steep potentials need a finer step; give up after four refinements
    let mut h = HESSIAN_STEP;
    let hess = loop {
        match hermitian_hessian(&field, c.z(), h) {
            Err(GeometryError::Cancellation(_)) if h > HESSIAN_STEP / 100.0 => h /= 4.0,
            other => break other?,
        }
    };
    Ok(hermitian_eigenvalues(&(&g + &hess))?[0])
}

pub fn is_admissible<S: ScalarField + ?Sized>(phi: &S, points: &[GrassmannPoint], tol: f64) -> AdmissibilityReport {
    is_admissible_scaled(phi, points, tol, 1.0)
}

/// Admissibility with respect to the rescaled metric `metric_scale·g`.
pub fn is_admissible_scaled<S: ScalarField + ?Sized>(
    phi: &S,
    points: &[GrassmannPoint],
    tol: f64,
    metric_scale: f64,
) -> AdmissibilityReport {
    let mut report = AdmissibilityReport { min_eigenvalues: Vec::new(), skipped: Vec::new(), tol };
    for (i, pt) in points.iter().enumerate() {
        match admissibility_margin(phi, pt, metric_scale) {
            Ok(m) => report.min_eigenvalues.push(m),
            Err(e) => report.skipped.push((i, e.to_string())),
        }
    }
    report
}
