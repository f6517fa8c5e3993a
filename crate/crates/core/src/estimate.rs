use serde::{Deserialize, Serialize};

use crate::linalg::Seed;

/// Value of an integral with its uncertainty.
///
/// For Monte-Carlo integrals `std_error` is the sample standard error; for
/// quadratures it is the change under one refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: Seed,
    /// The integral is known to be infinite; `mean` is `+∞`.
    pub divergent: bool,
    /// Some integrand values hit the exponent clip and were saturated.
    pub saturated: bool,
}

impl IntegralEstimate {
    pub fn divergent(seed: Seed) -> Self {
        Self { mean: f64::INFINITY, std_error: 0.0, samples: 0, seed, divergent: true, saturated: false }
    }

    /// `|self - reference|` in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.mean - reference).abs() / self.std_error.max(f64::MIN_POSITIVE)
    }

    pub fn relative_error(&self, reference: f64) -> f64 {
        (self.mean - reference).abs() / reference.abs()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { mean: self.mean * factor, std_error: self.std_error * factor.abs(), ..*self }
    }
}

/// Streaming mean/variance accumulator that merges in a fixed order.
///
/// The mean is a plain running sum divided by the count, so termwise
/// larger inputs in the same order give a larger or equal mean; the
/// variance uses Welford's update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    welford_mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        let delta = x - self.welford_mean;
        self.welford_mean += delta / self.count as f64;
        self.m2 += delta * (x - self.welford_mean);
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.welford_mean - self.welford_mean;
        let welford_mean = self.welford_mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + delta * delta * self.count as f64 * other.count as f64 / count as f64;
        Moments { count, sum: self.sum + other.sum, welford_mean, m2 }
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}
