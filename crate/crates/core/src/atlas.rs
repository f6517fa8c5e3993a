//! The Grassmannian `G(p, q)` of p-planes in `C^{p+q}` as an atlas of
//! affine charts, one per index set.
//!
//! A point is stored as any full-rank `(p+q)×p` representative; equality is
//! decided on orthogonal projectors so that the `GL_p` ambiguity never leaks
//! into comparisons.

use num_complex::Complex64;

use crate::error::{GeometryError, Result};
use crate::linalg::{
    complementary_minor, det, enumerate_index_sets, hermitian_eigen, hermitian_eigenvalues, inverse, minor, real_det, CMatrix, IndexSet,
};

/// Smallest admissible ratio `σ_min / σ_max` of a representative.
pub const RANK_RTOL: f64 = 1e-10;
/// A chart is usable when `|det m_I|` is at least this fraction of the largest maximal minor.
pub const CHART_RTOL: f64 = 1e-10;
/// Frobenius tolerance on projectors for point equality.
pub const POINT_EQ_TOL: f64 = 1e-8;
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct GrassmannPoint {
    p: usize,
    q: usize,
    rep: CMatrix,
}

impl GrassmannPoint {
    pub fn new(rep: CMatrix) -> Result<Self> {
        let p = rep.cols();
        if rep.rows() <= p {
            return Err(GeometryError::Dimension(format!("representative must have more rows than columns, got {}x{}", rep.rows(), p)));
        }
        if !rep.is_finite() {
            return Err(GeometryError::InvalidArgument("representative has non-finite entries".into()));
        }
        let ev = hermitian_eigenvalues(&(&rep.adjoint() * &rep))?;
        let (lo, hi) = (ev[0].max(0.0), ev[p - 1]);
        if hi <= 0.0 || (lo / hi).sqrt() <= RANK_RTOL {
            return Err(GeometryError::RankDeficient);
        }
        Ok(Self { p, q: rep.rows() - p, rep })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn rep(&self) -> &CMatrix {
        &self.rep
    }

    /// Orthogonal projector onto the column space, `P (P†P)⁻¹ P†`.
    pub fn projector(&self) -> CMatrix {
        let gram_inv = inverse(&(&self.rep.adjoint() * &self.rep)).expect("full-rank representative");
        &(&self.rep * &gram_inv) * &self.rep.adjoint()
    }

    pub fn distance_to(&self, other: &GrassmannPoint) -> f64 {
        if (self.p, self.q) != (other.p, other.q) {
            return f64::INFINITY;
        }
        (&self.projector() - &other.projector()).frobenius_norm()
    }

    pub fn approx_eq(&self, other: &GrassmannPoint, tol: f64) -> bool {
        self.distance_to(other) <= tol
    }

    /// Same point, different representative: `rep · g` for invertible `g`.
    pub fn with_right_action(&self, g: &CMatrix) -> Result<Self> {
        Self::new(self.rep.try_mul(g)?)
    }

    /// `|det m_I(rep)|` for every index set, lexicographic order.
    pub fn maximal_minors(&self) -> Vec<(IndexSet, f64)> {
        enumerate_index_sets(self.p, self.q)
            .into_iter()
            .map(|i| {
                let d = det(&minor(&self.rep, &i).expect("shape checked")).expect("square minor").norm();
                (i, d)
            })
            .collect()
    }

    /// The chart with the largest maximal minor; its coordinates all have modulus at most 1.
    pub fn best_chart(&self) -> IndexSet {
        self.maximal_minors()
            .into_iter()
            .fold(None::<(IndexSet, f64)>, |best, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            })
            .map(|(i, _)| i)
            .expect("at least one index set")
    }

    /// `|det m_I| / max_J |det m_J|`.
    pub fn chart_ratio(&self, index: &IndexSet) -> Result<f64> {
        let minors = self.maximal_minors();
        let largest = minors.iter().map(|m| m.1).fold(0.0, f64::max);
        let this = minors
            .iter()
            .find(|m| &m.0 == index)
            .ok_or_else(|| GeometryError::InvalidIndexSet(format!("{index} is not an index set of G({}, {})", self.p, self.q)))?
            .1;
        Ok(this / largest)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartCoordinates {
    pub chart: IndexSet,
    z: CMatrix,
}

impl ChartCoordinates {
    pub fn new(chart: IndexSet, z: CMatrix) -> Result<Self> {
        if z.rows() != chart.q() || z.cols() != chart.p() {
            return Err(GeometryError::Dimension(format!(
                "chart coordinates must be {}x{}, got {}x{}",
                chart.q(),
                chart.p(),
                z.rows(),
                z.cols()
            )));
        }
        if !z.is_finite() {
            return Err(GeometryError::InvalidArgument("chart coordinates must be finite".into()));
        }
        Ok(Self { chart, z })
    }

    pub fn z(&self) -> &CMatrix {
        &self.z
    }

    pub fn p(&self) -> usize {
        self.chart.p()
    }

    pub fn q(&self) -> usize {
        self.chart.q()
    }
}

/// `P_I`: identity on the rows of `I`, zero elsewhere.
pub fn canonical_point(index: &IndexSet) -> GrassmannPoint {
    let (p, q) = (index.p(), index.q());
    let mut rep = CMatrix::zeros(p + q, p);
    for (j, &row) in index.members().iter().enumerate() {
        rep[(row, j)] = Complex64::new(1.0, 0.0);
    }
    GrassmannPoint { p, q, rep }
}

/// Assembles the representative with `m_I = Id` and `m_{Iᶜ} = Z`.
pub fn chart_representative(chart: &IndexSet, z: &CMatrix) -> CMatrix {
    let (p, q) = (chart.p(), chart.q());
    let mut rep = CMatrix::zeros(p + q, p);
    for (j, &row) in chart.members().iter().enumerate() {
        rep[(row, j)] = Complex64::new(1.0, 0.0);
    }
    for (a, row) in chart.complement_rows().into_iter().enumerate() {
        for j in 0..p {
            rep[(row, j)] = z[(a, j)];
        }
    }
    rep
}

pub fn from_chart(c: &ChartCoordinates) -> GrassmannPoint {
    GrassmannPoint { p: c.p(), q: c.q(), rep: chart_representative(&c.chart, c.z()) }
}

pub fn to_chart(pt: &GrassmannPoint, index: &IndexSet) -> Result<ChartCoordinates> {
    if (index.p(), index.q()) != (pt.p, pt.q) {
        return Err(GeometryError::Dimension(format!(
            "index set of G({}, {}) used on a point of G({}, {})",
            index.p(),
            index.q(),
            pt.p,
            pt.q
        )));
    }
    let ratio = pt.chart_ratio(index)?;
    if ratio < CHART_RTOL {
        return Err(GeometryError::NotInChart { chart: index.to_string(), ratio });
    }
    let m = minor(&pt.rep, index)?;
    let m_inv = inverse(&m)?;
    let z = complementary_minor(&pt.rep, index)?.try_mul(&m_inv)?;
    ChartCoordinates::new(index.clone(), z)
}

/// Change of chart `Z_I ↦ Z_Ĩ`.
pub fn transition(c: &ChartCoordinates, target: &IndexSet) -> Result<ChartCoordinates> {
    to_chart(&from_chart(c), target)
}

/// `|det α|^{-2(p+q)}` with `α = m_Ĩ(P_I)`, the squared modulus of the
/// complex Jacobian determinant of the chart transition.
pub fn transition_jacobian_det_sq(c: &ChartCoordinates, target: &IndexSet) -> Result<f64> {
    transition(c, target)?;
    let alpha = minor(&from_chart(c).rep, target)?;
    let exponent = -2.0 * (c.p() + c.q()) as f64;
    Ok(det(&alpha)?.norm().powf(exponent))
}

/// Default step for [`numerical_jacobian_det_sq`].
pub const JACOBIAN_STEP: f64 = 1e-5;

/// `|det J|²` of a holomorphic map between coordinate matrices, from the
/// real `2d×2d` Jacobian assembled by central differences over real and
/// imaginary parts. For holomorphic maps `det J_real = |det J_complex|²`.
pub fn numerical_jacobian_det_sq<F>(map: F, z: &CMatrix, h: f64) -> Result<f64>
where
    F: Fn(&CMatrix) -> Result<CMatrix>,
{
    let scale = z.max_abs().max(1.0);
    if !(h > 64.0 * f64::EPSILON * scale) {
        return Err(GeometryError::StepUnderflow(h));
    }
    let d = z.rows() * z.cols();
    let image = map(z)?;
    if image.rows() * image.cols() != d {
        return Err(GeometryError::Dimension("map must preserve the coordinate count".into()));
    }
    let n = 2 * d;
    let mut jac = vec![0.0; n * n];
    for k in 0..d {
        for (part, dir) in [Complex64::new(h, 0.0), Complex64::new(0.0, h)].into_iter().enumerate() {
            let mut plus = z.clone();
            plus.as_mut_slice()[k] += dir;
            let mut minus = z.clone();
            minus.as_mut_slice()[k] -= dir;
            let fp = map(&plus)?;
            let fm = map(&minus)?;
            let col = 2 * k + part;
            for (m, (a, b)) in fp.as_slice().iter().zip(fm.as_slice()).enumerate() {
                let diff = (a - b) / (2.0 * h);
                jac[(2 * m) * n + col] = diff.re;
                jac[(2 * m + 1) * n + col] = diff.im;
            }
        }
    }
    Ok(real_det(n, &jac)?.abs())
}

pub fn check_unitary(u: &CMatrix) -> Result<()> {
    u.require_square()?;
    let dev = (&(&u.adjoint() * u) - &CMatrix::identity(u.rows())).frobenius_norm();
    if dev > UNITARY_TOL {
        return Err(GeometryError::NotUnitary(dev));
    }
    Ok(())
}

pub fn apply_unitary(u: &CMatrix, pt: &GrassmannPoint) -> Result<GrassmannPoint> {
    if u.rows() != pt.p + pt.q {
        return Err(GeometryError::Dimension(format!("unitary of size {} acting on C^{}", u.rows(), pt.p + pt.q)));
    }
    check_unitary(u)?;
    GrassmannPoint::new(u.try_mul(&pt.rep)?)
}

/// The chart map `Z ↦ Z̃` induced by `U` on a single chart.
pub fn unitary_chart_map(u: &CMatrix, c: &ChartCoordinates) -> Result<ChartCoordinates> {
    to_chart(&apply_unitary(u, &from_chart(c))?, &c.chart)
}

/// `|det δ|^{-2(p+q)}` with `δ = m_I(U P_I)`: Jacobian of [`unitary_chart_map`].
pub fn unitary_chart_jacobian_det_sq(u: &CMatrix, c: &ChartCoordinates) -> Result<f64> {
    unitary_chart_map(u, c)?;
    let delta = minor(&u.try_mul(&from_chart(c).rep)?, &c.chart)?;
    Ok(det(&delta)?.norm().powf(-2.0 * (c.p() + c.q()) as f64))
}

/// Orthogonal complement, as a point of `G(q, p)`.
pub fn dual(pt: &GrassmannPoint) -> GrassmannPoint {
    let n = pt.p + pt.q;
    let complement = &CMatrix::identity(n) - &pt.projector();
    let (_, vectors) = hermitian_eigen(&complement).expect("square projector");
    // eigenvalues ascend: the last q columns span the complement
    let rep = CMatrix::from_fn(n, pt.q, |i, j| vectors[(i, pt.p + j)]);
    GrassmannPoint { p: pt.q, q: pt.p, rep }
}

/// `F_I(Z_I) = det(Id + Zᵀ Z̄)`, evaluated as the Gram determinant of the
/// chart representative.
pub fn chart_gram_det(chart: &IndexSet, z: &CMatrix) -> f64 {
    det(&chart_representative(chart, z).gram()).expect("square gram").re
}

/// Both sides of `det(Id + Z_Iᵀ Z̄_I) = det(P_Ĩᵀ P̄_Ĩ) · |det m_I(Z_Ĩ)|^{-2}` for
/// disjoint `I`, `Ĩ`, where `P_Ĩ` is the chart-`Ĩ` representative.
pub fn disjoint_chart_identity(pt: &GrassmannPoint, index: &IndexSet, other: &IndexSet) -> Result<(f64, f64)> {
    if !index.is_disjoint(other) {
        return Err(GeometryError::InvalidIndexSet(format!("{index} and {other} are not disjoint")));
    }
    let zi = to_chart(pt, index)?;
    let lhs = chart_gram_det(index, zi.z());
    let zj = to_chart(pt, other)?;
    let p_other = chart_representative(other, zj.z());
    // rows of I lie inside Ĩᶜ, so m_I(P_Ĩ) is a block of Z_Ĩ
    let block = minor(&p_other, index)?;
    let rhs = det(&p_other.gram())?.re / det(&block)?.norm_sqr();
    Ok((lhs, rhs))
}
