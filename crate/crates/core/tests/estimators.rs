use grassmann_alpha::alpha::{
    dyadic_shell_integral, mc_integral, psi, sample_grassmann, total_volume, total_volume_with, truncated_singular_integrals,
    upper_bound_witness, ExtremalFamily, ExtremalForm, McConfig, VolumeProposal,
};
use grassmann_alpha::atlas::GrassmannPoint;
use grassmann_alpha::embedding::{product_extension, w_tail_integral};
use grassmann_alpha::linalg::{enumerate_index_sets, sample_haar_unitary, IndexSet};
use grassmann_alpha::metric::{is_admissible, ScalarField};
use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

fn cfg(seed: u64, samples: u64) -> McConfig {
    McConfig { seed, samples, shards: 8, truncation: None }
}

// π^{pq} Π_{j=1..p} (j-1)!/(q+j-1)!, from integrating the Beta law of ψ
fn volume_oracle(p: usize, q: usize) -> f64 {
    let log: f64 = (1..=p).map(|j| ln_gamma(j as f64) - ln_gamma((q + j) as f64)).sum();
    PI.powi((p * q) as i32) * log.exp()
}

#[test]
fn volumes_match_closed_forms() {
    for (p, q) in [(1, 1), (1, 2), (1, 3), (2, 2)] {
        let v = total_volume(p, q, &cfg(40 + p as u64 * 10 + q as u64, 400_000));
        let reference = volume_oracle(p, q);
        assert!(
            (v.mean - reference).abs() < 4.0 * v.std_error + 1e-9 * reference && v.relative_error(reference) < 0.01,
            "({p},{q}) {v:?} vs {reference}"
        );
    }
    // the radial integral for p = 1 is the same quantity
    assert!((volume_oracle(1, 2) - PI * PI * gamma(1.0) / gamma(3.0)).abs() < 1e-12);
}

#[test]
fn volume_does_not_depend_on_the_chart() {
    let sets = enumerate_index_sets(1, 2);
    let ests: Vec<_> =
        sets.iter().enumerate().map(|(i, s)| total_volume_with(s, VolumeProposal::GaussianRatio, &cfg(60 + i as u64, 200_000))).collect();
    for a in &ests {
        for b in &ests {
            let sigma = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
            assert!((a.mean - b.mean).abs() < 4.0 * sigma);
        }
    }
}

#[test]
fn chart_membership_is_permutation_symmetric() {
    // fraction of points whose best chart is I, for each I
    let (p, q) = (1, 2);
    let sets = enumerate_index_sets(p, q);
    let n = 30_000;
    let mut counts = vec![0usize; sets.len()];
    for i in 0..n {
        let best = sample_grassmann(p, q, 1_000 + i).best_chart();
        counts[sets.iter().position(|s| *s == best).unwrap()] += 1;
    }
    let expected = n as f64 / sets.len() as f64;
    let sigma = (expected * (1.0 - 1.0 / sets.len() as f64)).sqrt();
    for c in counts {
        assert!((c as f64 - expected).abs() < 3.5 * sigma, "{c} vs {expected}");
    }
}

#[test]
fn haar_rotation_leaves_the_integral_unchanged() {
    let chart = IndexSet::leading(2, 2);
    let u = sample_haar_unitary(4, 9);
    let phi = |pt: &GrassmannPoint| (-psi(&chart, pt)).max(-3.0);
    let rotated = |pt: &GrassmannPoint| phi(&grassmann_alpha::atlas::apply_unitary(&u, pt).unwrap());
    let a = mc_integral(0.7, &phi, 2, 2, &cfg(70, 100_000)).unwrap();
    let b = mc_integral(0.7, &rotated, 2, 2, &cfg(71, 100_000)).unwrap();
    let sigma = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() < 4.0 * sigma);
}

#[test]
fn standard_error_shrinks_like_root_n() {
    let chart = IndexSet::leading(1, 2);
    let phi = |pt: &GrassmannPoint| (-psi(&chart, pt)).max(-4.0);
    let mut ratios = Vec::new();
    for trial in 0..6 {
        let small = mc_integral(0.5, &phi, 1, 2, &cfg(100 + trial, 20_000)).unwrap();
        let large = mc_integral(0.5, &phi, 1, 2, &cfg(200 + trial, 40_000)).unwrap();
        ratios.push(large.std_error / small.std_error);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((mean * 2f64.sqrt() - 1.0).abs() < 0.2, "{ratios:?}");
}

#[test]
fn integral_of_a_product_extension_factorizes() {
    // ∫_{P¹×P¹} e^{-αψ(x)} = vol(P¹) · ∫_{P¹} e^{-αψ}
    let chart = IndexSet::leading(1, 1);
    let phi = |pt: &GrassmannPoint| -psi(&chart, pt).min(6.0);
    let ext = product_extension(phi);
    let config = cfg(80, 200_000);
    let single = mc_integral(0.6, &phi, 1, 1, &config).unwrap();
    let mut acc = 0.0;
    let n = 200_000u64;
    for i in 0..n {
        let a = sample_grassmann(1, 1, 5_000_000 + i);
        let b = sample_grassmann(1, 1, 9_000_000 + i);
        acc += (-0.6 * ext(&a, &b)).exp();
    }
    let product = PI * PI * acc / n as f64;
    assert!((product - PI * single.mean).abs() < 0.02 * product, "{product} vs {}", PI * single.mean);
}

#[test]
fn smoothed_family_is_admissible() {
    for (p, q) in [(1, 1), (1, 2), (2, 2)] {
        let chart = IndexSet::leading(p, q);
        for n in [2, 5, 12] {
            let fam = ExtremalFamily::new(chart.clone(), n, ExtremalForm::Smoothed).unwrap();
            let field = |pt: &GrassmannPoint| fam.value(pt);
            let points: Vec<_> = (0..60).map(|i| sample_grassmann(p, q, 300 + i)).collect();
            let report = is_admissible(&field as &dyn ScalarField, &points, 0.0);
            assert!(report.skipped.is_empty() && report.min_margin() > 0.0, "({p},{q}) n={n} {} {:?}", report.min_margin(), report.skipped);
        }
    }
}

#[test]
fn singular_integral_grows_logarithmically_for_two_by_two() {
    let ts = [1e2, 1e3, 1e4, 1e5];
    let est = truncated_singular_integrals(2, &ts, 1.0, &cfg(5, 1_000_000)).unwrap();
    let values: Vec<f64> = est.iter().map(|e| e.mean).collect();
    let slopes = grassmann_alpha::alpha::segment_slopes(&ts, &values, 3);
    assert!(slopes.iter().all(|s| *s > 0.0));
    assert!((slopes[0] - slopes[1]).abs() <= 0.3 * slopes[0], "{slopes:?}");
}

#[test]
fn truncated_shells_in_two_by_two_keep_growing() {
    let shell = |t: f64| dyadic_shell_integral(2, 0, &McConfig { truncation: Some(t), ..cfg(6, 200_000) }).unwrap().mean;
    assert!(shell(1e4) > shell(1e2));
}

#[test]
fn witness_and_tail_integral_agree_on_divergence() {
    let w = upper_bound_witness(1, 1, &[2, 4, 8], &[1.0, 10.0, 1e3], 10, &cfg(3, 20_000)).unwrap();
    assert!(w.monotone && w.truncated_growing);
    // ∫ (1+|z|²)^{-1} over C diverges
    assert!(w_tail_integral(1.0, 1).divergent);
}
