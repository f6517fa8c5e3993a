//! Complex dense linear algebra, index-set combinatorics and samplers.

mod decomp;
mod index_set;
mod matrix;
pub mod random;

pub use decomp::{det, hermitian_eigen, hermitian_eigenvalues, inverse, is_positive_definite, real_det, Definiteness, Lu};
pub use index_set::{binomial, enumerate_index_sets, IndexSet};
pub use matrix::{CMatrix, SINGULAR_PIVOT_RTOL};
pub use random::{complex_normal, derive_seed, ginibre_with, haar_unitary_with, rng_from_seed, sample_ginibre, sample_haar_unitary, Seed};

use crate::error::{GeometryError, Result};

/// The p×p block of `p_mat` on the rows of `index`, in order.
pub fn minor(p_mat: &CMatrix, index: &IndexSet) -> Result<CMatrix> {
    check_shape(p_mat, index)?;
    p_mat.select_rows(index.members())
}

/// The q×p block on the rows outside `index`.
pub fn complementary_minor(p_mat: &CMatrix, index: &IndexSet) -> Result<CMatrix> {
    check_shape(p_mat, index)?;
    p_mat.select_rows(&index.complement_rows())
}

fn check_shape(p_mat: &CMatrix, index: &IndexSet) -> Result<()> {
    if p_mat.rows() != index.p() + index.q() || p_mat.cols() != index.p() {
        return Err(GeometryError::Dimension(format!(
            "{}x{} matrix used with an index set of G({}, {})",
            p_mat.rows(),
            p_mat.cols(),
            index.p(),
            index.q()
        )));
    }
    Ok(())
}

/// `|det(Pᵀ P̄) - Σ_I |det m_I(P)|²| / (1 + |det(Pᵀ P̄)|)`.
pub fn cauchy_binet_residual(p_mat: &CMatrix) -> Result<f64> {
    let (gram_det, minor_sum) = cauchy_binet_sides(p_mat)?;
    Ok((gram_det - minor_sum).abs() / (1.0 + gram_det.abs()))
}

/// Both sides of the Cauchy–Binet identity: the Gram determinant and the
/// sum of squared maximal minors.
pub fn cauchy_binet_sides(p_mat: &CMatrix) -> Result<(f64, f64)> {
    let p = p_mat.cols();
    if p_mat.rows() < p {
        return Err(GeometryError::Dimension("fewer rows than columns".into()));
    }
    let gram_det = det(&p_mat.gram())?.re;
    if p_mat.rows() == p {
        return Ok((gram_det, det(p_mat)?.norm_sqr()));
    }
    let q = p_mat.rows() - p;
    let mut minor_sum = 0.0;
    for index in enumerate_index_sets(p, q) {
        minor_sum += det(&minor(p_mat, &index)?)?.norm_sqr();
    }
    Ok((gram_det, minor_sum))
}
