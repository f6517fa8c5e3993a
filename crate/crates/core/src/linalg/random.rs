//! Seeded samplers. Every sampler is a pure function of its dimensions and
//! seed; there is no global RNG.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::decomp::qr;
use super::matrix::CMatrix;

pub type Seed = u64;

pub fn rng_from_seed(seed: Seed) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Child seed for stream `index` of `seed` (shards, sub-experiments).
pub fn derive_seed(seed: Seed, index: u64) -> Seed {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Standard complex Gaussian: E|z|² = 1.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre_with<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn sample_ginibre(rows: usize, cols: usize, seed: Seed) -> CMatrix {
    ginibre_with(rows, cols, &mut rng_from_seed(seed))
}

pub fn haar_unitary_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = ginibre_with(n, n, rng);
    let (q, r) = qr(&g);
    // Q·diag(r_ii/|r_ii|) makes the R factor's diagonal positive real, which
    // is what turns QR of a Ginibre matrix into a Haar sample.
    let phases: Vec<Complex64> = (0..n)
        .map(|i| {
            let d = r[(i, i)];
            if d.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                d / d.norm()
            }
        })
        .collect();
    CMatrix::from_fn(n, n, |i, j| q[(i, j)] * phases[j])
}

pub fn sample_haar_unitary(n: usize, seed: Seed) -> CMatrix {
    haar_unitary_with(n, &mut rng_from_seed(seed))
}
