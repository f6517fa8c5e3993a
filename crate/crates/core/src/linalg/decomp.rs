use nalgebra::DMatrix;
use num_complex::Complex64;

use super::matrix::{CMatrix, SINGULAR_PIVOT_RTOL};
use crate::error::{GeometryError, Result};

/// LU factorisation with partial pivoting, `PA = LU`, packed in one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    packed: CMatrix,
    perm: Vec<usize>,
    parity: f64,
    singular: bool,
}

impl Lu {
    pub fn new(a: &CMatrix) -> Result<Self> {
        a.require_square()?;
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut parity = 1.0;
        let scale = a.max_abs();
        let mut singular = scale == 0.0;

        for k in 0..n {
            let (pivot_row, pivot_abs) =
                (k..n).map(|i| (i, lu[(i, k)].norm())).fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_abs <= SINGULAR_PIVOT_RTOL * scale {
                singular = true;
            }
            if pivot_abs == 0.0 {
                continue;
            }
            if pivot_row != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(pivot_row, j)];
                    lu[(pivot_row, j)] = tmp;
                }
                perm.swap(k, pivot_row);
                parity = -parity;
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        Ok(Self { packed: lu, perm, parity, singular })
    }

    /// True when some pivot fell below `1e-12 * max|a_ij|`.
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn det(&self) -> Complex64 {
        let n = self.packed.rows();
        (0..n).map(|i| self.packed[(i, i)]).product::<Complex64>() * self.parity
    }

    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        if self.singular {
            return Err(GeometryError::Singular);
        }
        let n = self.packed.rows();
        if b.rows() != n {
            return Err(GeometryError::Dimension(format!("rhs has {} rows, expected {n}", b.rows())));
        }
        let mut x = b.select_rows(&self.perm)?;
        for col in 0..b.cols() {
            for i in 0..n {
                let mut s = x[(i, col)];
                for k in 0..i {
                    s -= self.packed[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, col)];
                for k in (i + 1)..n {
                    s -= self.packed[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s / self.packed[(i, i)];
            }
        }
        Ok(x)
    }
}

pub fn det(a: &CMatrix) -> Result<Complex64> {
    Ok(Lu::new(a)?.det())
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    Lu::new(a)?.solve(&CMatrix::identity(a.rows()))
}

/// Eigenvalues of the Hermitian part of `h`, ascending.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    let sym = h.hermitian_part()?;
    let mut ev: Vec<f64> = sym.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

/// Eigen-decomposition of the Hermitian part of `h`: ascending eigenvalues
/// and the matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let sym = h.hermitian_part()?;
    let eig = sym.to_nalgebra().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = h.rows();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Definiteness {
    pub positive_definite: bool,
    pub min_eigenvalue: f64,
}

/// Symmetrises `h` and reports whether its smallest eigenvalue exceeds `-tol`.
pub fn is_positive_definite(h: &CMatrix, tol: f64) -> Result<Definiteness> {
    let ev = hermitian_eigenvalues(h)?;
    let min_eigenvalue = ev[0];
    Ok(Definiteness { positive_definite: min_eigenvalue > -tol, min_eigenvalue })
}

/// Thin QR via nalgebra's Householder implementation.
pub(crate) fn qr(a: &CMatrix) -> (CMatrix, CMatrix) {
    let m: DMatrix<Complex64> = a.to_nalgebra();
    let qr = m.qr();
    (CMatrix::from_nalgebra(&qr.q()), CMatrix::from_nalgebra(&qr.r()))
}

/// Real matrix determinant through the complex LU.
pub fn real_det(rows: usize, data: &[f64]) -> Result<f64> {
    let m = CMatrix::from_row_major(rows, rows, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())?;
    Ok(det(&m)?.re)
}
