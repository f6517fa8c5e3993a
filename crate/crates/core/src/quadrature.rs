//! One-dimensional quadrature on the real line.

/// Trapezoidal rule on `[lo, hi]` for an integrand that decays
/// exponentially at both ends, halving the step until the relative change
/// drops below `rtol`. Returns the value and the last change.
///
/// For integrands analytic in a strip around the real axis the error
/// decays like `exp(-c/h)`, so a handful of halvings suffice.
pub fn trapezoid_decaying<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rtol: f64) -> (f64, f64, u64) {
    let mut h = 0.5_f64.min((hi - lo) / 8.0);
    let mut n = ((hi - lo) / h).ceil() as u64;
    h = (hi - lo) / n as f64;
    let mut sum = 0.5 * (f(lo) + f(hi)) + (1..n).map(|k| f(lo + k as f64 * h)).sum::<f64>();
    let mut value = sum * h;
    let mut evals = n + 1;
    for _ in 0..20 {
        // add midpoints
        let mid: f64 = (0..n).map(|k| f(lo + (k as f64 + 0.5) * h)).sum();
        evals += n;
        sum += mid;
        n *= 2;
        h /= 2.0;
        let refined = sum * h;
        let change = (refined - value).abs();
        value = refined;
        if change <= rtol * value.abs() {
            return (value, change, evals);
        }
    }
    (value, f64::NAN, evals)
}
