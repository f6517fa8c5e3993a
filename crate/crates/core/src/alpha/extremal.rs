use serde::{Deserialize, Serialize};

use super::psi;
use crate::atlas::GrassmannPoint;
use crate::error::{GeometryError, Result};
use crate::linalg::IndexSet;

/// How the profile `f_n` is realised between its two affine branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtremalForm {
    /// `max(-(1 - 1/n) x, -n)`: convex, piecewise affine, kink at `n²/(n-1)`.
    ExactMax,
    /// Log-sum-exp of the two branches at inverse temperature `n`.
    Smoothed,
}

/// `f_n` on `x ≥ 0`.
pub fn f_n(n: u32, x: f64, form: ExtremalForm) -> Result<f64> {
    check_n(n)?;
    if !(x >= 0.0) {
        return Err(GeometryError::InvalidArgument(format!("f_n is defined on x >= 0, got {x}")));
    }
    Ok(profile(n, x, form))
}

fn check_n(n: u32) -> Result<()> {
    if n < 2 {
        return Err(GeometryError::InvalidArgument(format!("extremal index n must be at least 2, got {n}")));
    }
    Ok(())
}

fn slope(n: u32) -> f64 {
    1.0 - 1.0 / n as f64
}

fn profile(n: u32, x: f64, form: ExtremalForm) -> f64 {
    let nf = n as f64;
    match form {
        ExtremalForm::ExactMax => (-slope(n) * x).max(-nf),
        ExtremalForm::Smoothed => {
            let beta = nf;
            let a = -beta * slope(n) * x;
            let b = -beta * nf;
            let m = a.max(b);
            (m + ((a - m).exp() + (b - m).exp()).ln()) / beta
        }
    }
}

fn profile_derivative(n: u32, x: f64, form: ExtremalForm) -> f64 {
    let nf = n as f64;
    match form {
        ExtremalForm::ExactMax => {
            if x < kink(n) {
                -slope(n)
            } else {
                0.0
            }
        }
        ExtremalForm::Smoothed => {
            let beta = nf;
            let a = -beta * slope(n) * x;
            let b = -beta * nf;
            // weight of the sloped branch
            let sigma = 1.0 / (1.0 + (b - a).exp());
            -slope(n) * sigma
        }
    }
}

/// Where the two branches of the exact form meet, `n²/(n-1)`, inside `(n, 2n]`.
pub fn kink(n: u32) -> f64 {
    let nf = n as f64;
    nf * nf / (nf - 1.0)
}

/// `φ_n = f_n ∘ ψ_I`, equal to `-n` where `ψ_I = +∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalFamily {
    pub chart: IndexSet,
    n: u32,
    pub form: ExtremalForm,
}

impl ExtremalFamily {
    pub fn new(chart: IndexSet, n: u32, form: ExtremalForm) -> Result<Self> {
        check_n(n)?;
        Ok(Self { chart, n, form })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Smoothing inverse temperature (equal to `n`).
    pub fn beta(&self) -> f64 {
        self.n as f64
    }

    pub fn profile(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            return -(self.n as f64);
        }
        profile(self.n, x.max(0.0), self.form)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        profile_derivative(self.n, x.max(0.0), self.form)
    }

    pub fn value(&self, pt: &GrassmannPoint) -> f64 {
        self.profile(psi(&self.chart, pt))
    }
}

pub fn phi_n(family: &ExtremalFamily, pt: &GrassmannPoint) -> f64 {
    family.value(pt)
}
