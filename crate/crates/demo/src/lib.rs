//! Browser demo over the core crate. The plain functions are what the page
//! calls through the `wasm_bindgen` wrappers; they also run natively.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use grassmann_alpha::alpha::{alpha_scan, f_n, truncated_singular_integrals, ExtremalForm, McConfig, ScanOptions, Verdict};
use wasm_bindgen::prelude::*;

/// Kept small so a single-threaded browser tab stays responsive.
pub const MAX_SAMPLES: u64 = 200_000;

fn config(seed: u64, samples: u64) -> McConfig {
    McConfig { seed, samples: samples.clamp(1, MAX_SAMPLES), shards: 4, truncation: None }
}

/// `∫ e^{-α φ_n} dV` for each `n`, followed by the verdict code
/// (0 bounded, 1 growing, 2 inconclusive).
pub fn alpha_growth(p: usize, q: usize, alpha: f64, ns: &[u32], samples: u64, seed: u64) -> Result<Vec<f64>, String> {
    if p == 0 || q == 0 || p + q > 5 {
        return Err(format!("the demo supports 1 <= p, q and p+q <= 5, got ({p},{q})"));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(format!("alpha must lie in (0, 2), got {alpha}"));
    }
    let scan = alpha_scan(p, q, &[alpha], ns, &config(seed, samples), &ScanOptions::default()).map_err(|e| e.to_string())?;
    let mut out: Vec<f64> = scan.cells[0].iter().map(|e| e.mean).collect();
    out.push(match scan.verdicts[0] {
        Verdict::Bounded => 0.0,
        Verdict::Growing => 1.0,
        Verdict::Inconclusive => 2.0,
    });
    Ok(out)
}

/// `f_n` on `points` equally spaced `x` in `[0, x_max]`, exact form then smoothed form.
pub fn extremal_profile(n: u32, x_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 || !(x_max > 0.0) {
        return Err("need at least two points and a positive range".into());
    }
    let xs = (0..points).map(|i| x_max * i as f64 / (points - 1) as f64);
    let mut out = Vec::with_capacity(2 * points);
    for form in [ExtremalForm::ExactMax, ExtremalForm::Smoothed] {
        for x in xs.clone() {
            out.push(f_n(n, x, form).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

/// Truncated `∫_{‖X‖≤1} min(|det X|^{-2}, T)` over `n×n` matrices for each `T`.
pub fn singular_growth(n: usize, ts: &[f64], samples: u64, seed: u64) -> Result<Vec<f64>, String> {
    if !(1..=3).contains(&n) {
        return Err(format!("matrix size must be 1, 2 or 3, got {n}"));
    }
    let est = truncated_singular_integrals(n, ts, 1.0, &config(seed, samples)).map_err(|e| e.to_string())?;
    Ok(est.iter().map(|e| e.mean).collect())
}

fn js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = alphaGrowth)]
pub fn alpha_growth_js(p: usize, q: usize, alpha: f64, ns: Vec<u32>, samples: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    js(alpha_growth(p, q, alpha, &ns, samples as u64, seed as u64))
}

#[wasm_bindgen(js_name = extremalProfile)]
pub fn extremal_profile_js(n: u32, x_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    js(extremal_profile(n, x_max, points))
}

#[wasm_bindgen(js_name = singularGrowth)]
pub fn singular_growth_js(n: usize, ts: Vec<f64>, samples: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    js(singular_growth(n, &ts, samples as u64, seed as u64))
}
