//! One function per subcommand. Each returns its check records and a table
//! of raw values; [`run`] wraps them into a [`Report`].

use std::f64::consts::PI;
use std::time::Instant;

use grassmann_alpha::alpha::{
    alpha_scan, dyadic_shell_integral, f_n, kink, log_slope, segment_slopes, total_volume, total_volume_with, truncated_singular_integrals,
    upper_bound_witness, AlphaScan, ExtremalFamily, ExtremalForm, McConfig, ScanOptions, Verdict, VolumeProposal,
};
use grassmann_alpha::atlas::{
    disjoint_chart_identity, numerical_jacobian_det_sq, to_chart, transition, transition_jacobian_det_sq, unitary_chart_jacobian_det_sq,
    unitary_chart_map, ChartCoordinates, GrassmannPoint, JACOBIAN_STEP,
};
use grassmann_alpha::embedding::{combined_bound_logs, gram_bounds, pullback_residual_default, w_tail_integral, WParam};
use grassmann_alpha::linalg::{
    cauchy_binet_residual, complex_normal, derive_seed, det, enumerate_index_sets, ginibre_with, haar_unitary_with, rng_from_seed,
    sample_ginibre, CMatrix, IndexSet,
};
use grassmann_alpha::metric::{is_admissible, metric_closed_form, metric_finite_difference, potential, ricci, volume_density, ScalarField};
use num_complex::Complex64;
use rand::Rng;

use crate::config::{Command, ConfigError, RunConfig};
use crate::report::{num, CheckRecord, LemmaTag, Report, Table};

/// Charts used for pointwise Jacobian checks must have
/// `|det m_I| ≥ WELL_CONDITIONED · max minor`.
pub const WELL_CONDITIONED: f64 = 1e-2;

#[derive(Debug)]
pub enum CommandError {
    Config(ConfigError),
    Geometry(grassmann_alpha::GeometryError),
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::Config(e) => write!(f, "{e}"),
            CommandError::Geometry(e) => write!(f, "numerical error: {e}"),
        }
    }
}

impl std::error::Error for CommandError {}

impl From<grassmann_alpha::GeometryError> for CommandError {
    fn from(e: grassmann_alpha::GeometryError) -> Self {
        CommandError::Geometry(e)
    }
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Config(e)
    }
}

pub type CommandResult = Result<(Vec<CheckRecord>, Table), CommandError>;

pub fn run(config: &RunConfig) -> Result<(Report, Table), CommandError> {
    config.validate()?;
    let start = Instant::now();
    let (records, table) = match config.command {
        Command::Verify => cmd_verify(config)?,
        Command::Einstein => cmd_einstein(config)?,
        Command::Volume => cmd_volume(config)?,
        Command::AlphaScan => cmd_alpha_scan(config)?,
        Command::Divergence => cmd_divergence(config)?,
        Command::Pullback => cmd_pullback(config)?,
    };
    Ok((Report::new(config, records, start.elapsed().as_secs_f64()), table))
}

fn mc(config: &RunConfig, stream: u64) -> McConfig {
    McConfig { seed: derive_seed(config.seed, stream), samples: config.samples, shards: config.shards, truncation: None }
}

fn max(values: &[f64]) -> f64 {
    values.iter().cloned().fold(0.0, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Uniform point of the Frobenius ball of radius `r` in `M_{q,p}(C)`.
fn ball_point<R: Rng + ?Sized>(q: usize, p: usize, r: f64, rng: &mut R) -> CMatrix {
    let dir = ginibre_with(q, p, rng);
    let dim = (2 * p * q) as f64;
    let radius = r * rng.random::<f64>().powf(1.0 / dim);
    dir.scale_real(radius / dir.frobenius_norm())
}

/// The metric the curvature checks compare against; negated under fault injection.
fn checked_metric(config: &RunConfig, z: &CMatrix) -> CMatrix {
    let g = metric_closed_form(z).into_inner();
    if config.inject_fault {
        g.scale_real(-1.0)
    } else {
        g
    }
}

fn einstein_residuals(config: &RunConfig, count: usize, stream: u64) -> Result<Vec<f64>, CommandError> {
    let (p, q) = (config.p, config.q);
    let k = (p + q) as f64;
    let mut rng = rng_from_seed(derive_seed(config.seed, stream));
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let z = ball_point(q, p, 2.0, &mut rng);
        let g = checked_metric(config, &z);
        let r = ricci(&z)?;
        out.push((&*r - &g.scale_real(k)).frobenius_norm() / g.frobenius_norm());
    }
    Ok(out)
}

/// Random point with two well-conditioned charts.
fn point_with_charts<R: Rng + ?Sized>(p: usize, q: usize, sets: &[IndexSet], rng: &mut R) -> (GrassmannPoint, IndexSet, IndexSet) {
    loop {
        let pt = GrassmannPoint::new(ginibre_with(p + q, p, rng)).expect("full rank");
        let a = sets[rng.random_range(0..sets.len())].clone();
        let b = sets[rng.random_range(0..sets.len())].clone();
        if pt.chart_ratio(&a).unwrap_or(0.0) >= WELL_CONDITIONED && pt.chart_ratio(&b).unwrap_or(0.0) >= WELL_CONDITIONED {
            return (pt, a, b);
        }
    }
}

/// Both sides of the transition Jacobian and density rules on one triple.
pub fn transition_triple(pt: &GrassmannPoint, from: &IndexSet, target: &IndexSet) -> Result<(f64, f64), CommandError> {
    let zi = to_chart(pt, from)?;
    let closed = transition_jacobian_det_sq(&zi, target)?;
    let map = |z: &CMatrix| Ok(transition(&ChartCoordinates::new(from.clone(), z.clone())?, target)?.z().clone());
    let numerical = numerical_jacobian_det_sq(map, zi.z(), JACOBIAN_STEP)?;
    let zj = transition(&zi, target)?;
    let density = rel(volume_density(zj.z()) * closed, volume_density(zi.z()));
    Ok((rel(numerical, closed), density))
}

/// `(|closed - numerical|/closed, |λ(Z̃)·J - λ(Z)|/λ(Z))` for one unitary.
pub fn unitary_pair(u: &CMatrix, pt: &GrassmannPoint, chart: &IndexSet) -> Result<(f64, f64), CommandError> {
    let c = to_chart(pt, chart)?;
    let image = unitary_chart_map(u, &c)?;
    let map = |z: &CMatrix| Ok(unitary_chart_map(u, &ChartCoordinates::new(chart.clone(), z.clone())?)?.z().clone());
    let numerical = numerical_jacobian_det_sq(map, c.z(), JACOBIAN_STEP)?;
    let closed = unitary_chart_jacobian_det_sq(u, &c)?;
    let source = volume_density(c.z());
    Ok((rel(numerical, closed), rel(volume_density(image.z()) * numerical, source)))
}

pub fn cmd_verify(config: &RunConfig) -> CommandResult {
    let (p, q) = (config.p, config.q);
    let n = config.points;
    let mut records = Vec::new();
    let mut table = Table::new(&["check", "index", "value"]);
    let series = |name: &'static str, values: &[f64], table: &mut Table| {
        for (i, v) in values.iter().enumerate() {
            table.push(vec![name.into(), i.to_string(), num(*v)]);
        }
    };

    let cb: Vec<f64> = (0..2 * n)
        .map(|i| cauchy_binet_residual(&sample_ginibre(p + q, p, derive_seed(config.seed, i as u64))))
        .collect::<Result<_, _>>()?;
    series("cauchy_binet", &cb, &mut table);
    records.push(CheckRecord::at_most("cauchy_binet", LemmaTag::CauchyBinet, max(&cb), config.tolerance("cauchy_binet", 1e-10)));

    let sets = enumerate_index_sets(p, q);
    let mut rng = rng_from_seed(derive_seed(config.seed, 0x100));
    let (mut jac, mut dens) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let (pt, a, b) = point_with_charts(p, q, &sets, &mut rng);
        let (j, d) = transition_triple(&pt, &a, &b)?;
        jac.push(j);
        dens.push(d);
    }
    series("transition_jacobian", &jac, &mut table);
    series("density_transformation", &dens, &mut table);
    records.push(CheckRecord::at_most(
        "transition_jacobian",
        LemmaTag::TransitionJacobian,
        max(&jac),
        config.tolerance("transition_jacobian", 1e-6),
    ));
    records.push(CheckRecord::at_most(
        "density_transformation",
        LemmaTag::DensityTransformation,
        max(&dens),
        config.tolerance("density_transformation", 1e-8),
    ));

    let mut rng = rng_from_seed(derive_seed(config.seed, 0x200));
    let (mut uj, mut ud) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let pt = GrassmannPoint::new(ginibre_with(p + q, p, &mut rng))?;
        let chart = pt.best_chart();
        let u = loop {
            let u = haar_unitary_with(p + q, &mut rng);
            let moved = GrassmannPoint::new(u.try_mul(pt.rep())?)?;
            if moved.chart_ratio(&chart)? >= WELL_CONDITIONED {
                break u;
            }
        };
        let (j, d) = unitary_pair(&u, &pt, &chart)?;
        uj.push(j);
        ud.push(d);
    }
    series("unitary_jacobian", &uj, &mut table);
    series("unitary_invariance", &ud, &mut table);
    records.push(CheckRecord::at_most(
        "unitary_jacobian",
        LemmaTag::UnitaryInvariance,
        max(&uj),
        config.tolerance("unitary_jacobian", 1e-6),
    ));
    records.push(CheckRecord::at_most(
        "unitary_invariance",
        LemmaTag::UnitaryInvariance,
        max(&ud),
        config.tolerance("unitary_invariance", 1e-6),
    ));

    if p <= q {
        let mut rng = rng_from_seed(derive_seed(config.seed, 0x300));
        let mut res = Vec::with_capacity(n);
        for _ in 0..n {
            let pt = GrassmannPoint::new(ginibre_with(p + q, p, &mut rng))?;
            let a = sets[rng.random_range(0..sets.len())].clone();
            let others: Vec<&IndexSet> = sets.iter().filter(|s| s.is_disjoint(&a)).collect();
            let b = others[rng.random_range(0..others.len())];
            let (lhs, rhs) = disjoint_chart_identity(&pt, &a, b)?;
            res.push(rel(rhs, lhs));
        }
        series("disjoint_chart_identity", &res, &mut table);
        records.push(CheckRecord::at_most(
            "disjoint_chart_identity",
            LemmaTag::DisjointChartIdentity,
            max(&res),
            config.tolerance("disjoint_chart_identity", 1e-8),
        ));
    }

    let zero = CMatrix::zeros(q, p);
    let id = CMatrix::identity(p * q);
    let closed = (&checked_metric(config, &zero) - &id).max_abs();
    let fd = (&metric_finite_difference(&zero)?.into_inner() - &id).max_abs();
    records.push(CheckRecord::at_most(
        "metric_origin_closed_form",
        LemmaTag::MetricAtOrigin,
        closed,
        config.tolerance("metric_origin_closed_form", 1e-10),
    ));
    records.push(CheckRecord::at_most(
        "metric_origin_finite_difference",
        LemmaTag::MetricAtOrigin,
        fd,
        config.tolerance("metric_origin_finite_difference", 1e-6),
    ));

    let mut rng = rng_from_seed(derive_seed(config.seed, 0x400));
    let det_res: Vec<f64> = (0..20 * n)
        .map(|_| {
            let z = ball_point(q, p, 2.0, &mut rng);
            let expected = (-((p + q) as f64) * potential(&z)).exp();
            det(&checked_metric(config, &z)).map(|d| rel(d.re, expected))
        })
        .collect::<Result<_, _>>()?;
    series("metric_determinant", &det_res, &mut table);
    records.push(CheckRecord::at_most(
        "metric_determinant",
        LemmaTag::MetricDeterminant,
        max(&det_res),
        config.tolerance("metric_determinant", 1e-5),
    ));

    let ein = einstein_residuals(config, n.min(20), 0x500)?;
    series("einstein", &ein, &mut table);
    records.push(CheckRecord::at_most("einstein", LemmaTag::Einstein, max(&ein), config.tolerance("einstein", 1e-3)));
    Ok((records, table))
}

pub fn cmd_einstein(config: &RunConfig) -> CommandResult {
    let ein = einstein_residuals(config, config.points, 0x500)?;
    let mut table = Table::new(&["index", "residual"]);
    for (i, v) in ein.iter().enumerate() {
        table.push(vec![i.to_string(), num(*v)]);
    }
    let rec = CheckRecord::at_most("einstein", LemmaTag::Einstein, max(&ein), config.tolerance("einstein", 1e-3))
        .with_note(format!("{} points uniform in the ball ||Z|| <= 2", ein.len()));
    Ok((vec![rec], table))
}

/// Total volume from the closed form; for `p = 1` it is the radial integral.
pub fn reference_volume(p: usize, q: usize) -> f64 {
    let factorial = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    PI.powi((p * q) as i32) * (1..=p).map(|j| factorial(j - 1) / factorial(q + j - 1)).product::<f64>()
}

pub fn cmd_volume(config: &RunConfig) -> CommandResult {
    let (p, q) = (config.p, config.q);
    let mut table = Table::new(&["chart", "proposal", "samples", "mean", "std_error", "reference"]);
    let reference = if p == 1 { w_tail_integral((q + 1) as f64, q).mean } else { reference_volume(p, q) };
    let main = total_volume(p, q, &mc(config, 0));
    let proposal = if p * q == 1 { "heavy-tailed-product" } else { "gaussian-ratio" };
    table.push(vec![
        IndexSet::leading(p, q).to_string(),
        proposal.into(),
        main.samples.to_string(),
        num(main.mean),
        num(main.std_error),
        num(reference),
    ]);
    let tol = if p * q == 1 { 5e-3 } else { 1e-2 };
    let mut records = vec![CheckRecord::at_most(
        "total_volume",
        LemmaTag::TotalVolume,
        main.relative_error(reference),
        config.tolerance("total_volume", tol),
    )
    .with_note(if p == 1 { "reference: radial quadrature" } else { "reference: closed-form product of factorials" })];

    // chart consistency with the finite-variance estimator in every chart
    let sets = enumerate_index_sets(p, q);
    let per_chart = McConfig { samples: (config.samples / 4).max(1), ..mc(config, 1) };
    let ests: Vec<_> = sets
        .iter()
        .take(6)
        .enumerate()
        .map(|(i, s)| (s, total_volume_with(s, VolumeProposal::GaussianRatio, &per_chart.derived(i as u64))))
        .collect();
    let mut worst = 0.0f64;
    for (s, e) in &ests {
        table.push(vec![s.to_string(), "gaussian-ratio".into(), e.samples.to_string(), num(e.mean), num(e.std_error), num(reference)]);
        for (_, f) in &ests {
            let sigma = (e.std_error.powi(2) + f.std_error.powi(2)).sqrt();
            worst = worst.max((e.mean - f.mean).abs() / sigma.max(f64::MIN_POSITIVE));
        }
    }
    records.push(CheckRecord::at_most("chart_consistency_z", LemmaTag::TotalVolume, worst, config.tolerance("chart_consistency_z", 4.0)));
    Ok((records, table))
}

/// Grid assertions on the profiles `f_n`; returns `(monotone, convex, slope, limit)`.
pub fn extremal_grid_checks(ns: &[u32]) -> (bool, bool, bool, bool) {
    let xs: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.01).collect();
    let mut grid: Vec<u32> = (2..=64).collect();
    grid.extend_from_slice(ns);
    grid.sort_unstable();
    grid.dedup();
    let (mut monotone, mut convex, mut slope) = (true, true, true);
    for form in [ExtremalForm::ExactMax, ExtremalForm::Smoothed] {
        let f = |n: u32, x: f64| f_n(n, x, form).expect("valid grid");
        for &n in &grid {
            for (i, &x) in xs.iter().enumerate() {
                monotone &= f(n, x) >= f(n + 1, x) && f(n, x) >= -x;
                if i > 0 && i + 1 < xs.len() {
                    convex &= f(n, xs[i - 1]) + f(n, xs[i + 1]) - 2.0 * f(n, x) >= -1e-12;
                    let d = (f(n, xs[i + 1]) - f(n, x)) / (xs[i + 1] - x);
                    slope &= 1.0 + d >= 1.0 / n as f64 - 1e-12;
                }
            }
            slope &= kink(n) > n as f64 && kink(n) <= 2.0 * n as f64;
        }
    }
    let limit = xs.iter().all(|&x| (f_n(1 << 20, x, ExtremalForm::ExactMax).unwrap() + x).abs() <= 1e-5 * (1.0 + x));
    (monotone, convex, slope, limit)
}

fn half_gap_around_one(alphas: &[f64]) -> f64 {
    let below = alphas.iter().cloned().filter(|a| *a < 1.0).fold(f64::NEG_INFINITY, f64::max);
    let above = alphas.iter().cloned().filter(|a| *a > 1.0).fold(f64::INFINITY, f64::min);
    0.5 * (above - below)
}

fn scan_rows(scan: &AlphaScan, table: &mut Table) {
    for (i, row) in scan.cells.iter().enumerate() {
        for (k, e) in row.iter().enumerate() {
            table.push(vec![
                num(scan.alphas[i]),
                num(scan.options.metric_scale),
                scan.ns[k].to_string(),
                num(e.mean),
                num(e.std_error),
                e.saturated.to_string(),
                format!("{:?}", scan.verdicts[i]).to_uppercase(),
            ]);
        }
    }
}

pub fn cmd_alpha_scan(config: &RunConfig) -> CommandResult {
    let (p, q) = (config.p, config.q);
    let mut records = Vec::new();
    let mut table = Table::new(&["alpha", "metric_scale", "n", "mean", "std_error", "saturated", "verdict"]);

    let (monotone, convex, slope, limit) = extremal_grid_checks(&config.ns);
    records.push(CheckRecord::holds("extremal_monotone_in_n", LemmaTag::ExtremalFamily, monotone));
    records.push(CheckRecord::holds("extremal_convex", LemmaTag::ExtremalFamily, convex));
    records.push(CheckRecord::holds("extremal_slope_bound", LemmaTag::ExtremalFamily, slope));
    records.push(CheckRecord::holds("extremal_limit", LemmaTag::ExtremalFamily, limit));

    let chart = IndexSet::leading(p, q);
    let points: Vec<GrassmannPoint> = (0..20 * config.points)
        .map(|i| grassmann_alpha::alpha::sample_grassmann(p, q, derive_seed(config.seed, 0x600 + i as u64)))
        .collect();
    for &n in [config.ns[0], *config.ns.last().expect("nonempty")].iter().collect::<std::collections::BTreeSet<_>>() {
        let fam = ExtremalFamily::new(chart.clone(), n, ExtremalForm::Smoothed)?;
        let field = |pt: &GrassmannPoint| fam.value(pt);
        let report = is_admissible(&field as &dyn ScalarField, &points, 0.0);
        records.push(
            CheckRecord::at_least(format!("smoothed_admissibility_n{n}"), LemmaTag::ExtremalFamily, report.min_margin(), f64::MIN_POSITIVE)
                .with_note(format!("{} points, {} skipped", points.len(), report.skipped.len())),
        );
        records.push(CheckRecord::holds(
            format!("smoothed_admissibility_n{n}_evaluated"),
            LemmaTag::ExtremalFamily,
            report.skipped.is_empty(),
        ));
    }

    let scan_cfg = mc(config, 0x700);
    let scan = alpha_scan(p, q, &config.alphas, &config.ns, &scan_cfg, &ScanOptions::default())?;
    scan_rows(&scan, &mut table);
    for (i, &a) in config.alphas.iter().enumerate() {
        let means: Vec<f64> = scan.cells[i].iter().map(|e| e.mean).collect();
        let growth = means[means.len() - 1] / means[0];
        let top = &means[means.len() / 2..];
        let spread = top.iter().cloned().fold(0.0, f64::max) / top.iter().cloned().fold(f64::INFINITY, f64::min);
        let name = format!("alpha_{a}");
        let verdict = format!("verdict {:?}", scan.verdicts[i]).to_uppercase();
        if a < 1.0 {
            records
                .push(CheckRecord::at_most(format!("{name}_top_half_spread"), LemmaTag::AlphaLowerBound, spread, 2.0).with_note(verdict));
            records.push(CheckRecord::holds(format!("{name}_bounded"), LemmaTag::AlphaLowerBound, scan.verdicts[i] == Verdict::Bounded));
        } else if a > 1.0 {
            records.push(CheckRecord::at_least(format!("{name}_growth"), LemmaTag::AlphaUpperBound, growth, 10.0).with_note(verdict));
            records.push(CheckRecord::holds(format!("{name}_growing"), LemmaTag::AlphaUpperBound, scan.verdicts[i] == Verdict::Growing));
        }
    }
    let gap = half_gap_around_one(&config.alphas);
    let has_bracket = gap.is_finite();
    if has_bracket {
        let t = scan.threshold.unwrap_or(f64::NAN);
        records.push(CheckRecord::at_most("threshold_distance_from_one", LemmaTag::AlphaUpperBound, (t - 1.0).abs(), gap));

        // the same protocol for (c·g, c·φ) with c = p+q
        let c = (p + q) as f64;
        let alphas: Vec<f64> = config.alphas.iter().map(|a| a / c).collect();
        let options = ScanOptions { metric_scale: c, ..ScanOptions::default() };
        let scaled = alpha_scan(p, q, &alphas, &config.ns, &scan_cfg, &options)?;
        scan_rows(&scaled, &mut table);
        let tc = scaled.threshold.unwrap_or(f64::NAN);
        records.push(CheckRecord::holds("rescaled_verdicts_match", LemmaTag::ThresholdNormalization, scaled.verdicts == scan.verdicts));
        records.push(CheckRecord::at_most(
            "rescaled_threshold_identity",
            LemmaTag::ThresholdNormalization,
            (tc - grassmann_alpha::alpha::scaled_alpha_threshold(t, c)).abs(),
            1e-12,
        ));
        records.push(
            CheckRecord::at_most("normalized_threshold_distance", LemmaTag::ThresholdNormalization, (tc - 1.0 / c).abs(), gap / c)
                .with_note(format!("normalized threshold {tc} against 1/(p+q) = {}", 1.0 / c)),
        );
    }

    if p <= q {
        let witness_cfg = McConfig { samples: config.samples.min(50_000), ..mc(config, 0x800) };
        let w = upper_bound_witness(p, q, &config.ns, &[1.0, 10.0, 100.0, 1000.0], config.points, &witness_cfg)?;
        records.push(CheckRecord::holds("alpha_one_monotone_in_n", LemmaTag::AlphaUpperBound, w.monotone));
        records.push(CheckRecord::holds("truncated_f_integral_growing", LemmaTag::AlphaUpperBound, w.truncated_growing));
        if p == 1 && q == 1 {
            let worst = w.radii.iter().zip(&w.truncated).map(|(r, e)| rel(e.mean, PI * (r * r).ln_1p())).fold(0.0, f64::max);
            records.push(CheckRecord::at_most("truncated_f_integral_log_growth", LemmaTag::AlphaUpperBound, worst, 1e-9));
        }
        records.push(CheckRecord::at_most(
            "disjoint_chart_identity",
            LemmaTag::DisjointChartIdentity,
            w.max_disjoint_residual(),
            config.tolerance("disjoint_chart_identity", 1e-8),
        ));
    }
    Ok((records, table))
}

pub fn cmd_divergence(config: &RunConfig) -> CommandResult {
    let mut records = Vec::new();
    let mut table = Table::new(&["n", "quantity", "level", "mean", "std_error", "reference"]);
    let r = config.radius;
    for (idx, &n) in config.n_dims.iter().enumerate() {
        let base = mc(config, 0x900 + idx as u64);
        let ests = truncated_singular_integrals(n, &config.ts, r, &base)?;
        let values: Vec<f64> = ests.iter().map(|e| e.mean).collect();
        for (e, &t) in ests.iter().zip(&config.ts) {
            // polar integration of min(ρ^{-2}, T) over the disc
            let reference = (n == 1 && t * r * r >= 1.0).then(|| PI * (1.0 + (t * r * r).ln()));
            table.push(vec![
                n.to_string(),
                "truncated".into(),
                num(t),
                num(e.mean),
                num(e.std_error),
                reference.map(num).unwrap_or_default(),
            ]);
            if let Some(reference) = reference {
                records.push(CheckRecord::at_most(
                    format!("n1_truncated_T{t:e}_z"),
                    LemmaTag::SingularDivergence,
                    e.z_score(reference),
                    4.0,
                ));
                if t <= 1e4 {
                    records.push(CheckRecord::at_most(
                        format!("n1_truncated_T{t:e}_relative"),
                        LemmaTag::SingularDivergence,
                        e.relative_error(reference),
                        config.tolerance("singular_relative", 0.02),
                    ));
                }
            }
        }
        if n == 1 {
            let shell_cfg = McConfig { samples: (config.samples / 8).max(1), ..base.derived(1) };
            let target = 2.0 * PI * 2f64.ln();
            for k in 0..4 {
                let e = dyadic_shell_integral(1, k, &shell_cfg.derived(k as u64))?;
                table.push(vec!["1".into(), "shell".into(), k.to_string(), num(e.mean), num(e.std_error), num(target)]);
                records.push(CheckRecord::at_most(
                    format!("n1_shell_{k}"),
                    LemmaTag::SingularDivergence,
                    e.relative_error(target),
                    config.tolerance("singular_relative", 0.02),
                ));
            }
        } else {
            let slope = log_slope(&config.ts, &values);
            records.push(CheckRecord::at_least(format!("n{n}_log_slope"), LemmaTag::SingularDivergence, slope, f64::MIN_POSITIVE));
            let windows = segment_slopes(&config.ts, &values, 3.min(config.ts.len()));
            if windows.len() >= 2 {
                let (first, last) = (windows[0], windows[windows.len() - 1]);
                records.push(
                    CheckRecord::at_most(
                        format!("n{n}_slope_stability"),
                        LemmaTag::SingularDivergence,
                        rel(last, first),
                        config.tolerance("slope_stability", 0.3),
                    )
                    .with_note(format!("window slopes {windows:?}")),
                );
            }
            let shell = dyadic_shell_integral(n, 0, &McConfig { samples: 1, ..base })?;
            records.push(CheckRecord::holds(format!("n{n}_shell_divergent"), LemmaTag::SingularDivergence, shell.divergent));
        }
    }
    Ok((records, table))
}

pub fn cmd_pullback(config: &RunConfig) -> CommandResult {
    let (p, q) = (config.p, config.q);
    if p > q {
        return Err(ConfigError(format!("pullback needs p <= q, got p={p} q={q}")).into());
    }
    let mut records = Vec::new();
    let mut table = Table::new(&["check", "index", "value"]);
    let mut rng = rng_from_seed(derive_seed(config.seed, 0xA00));

    let mut residuals = Vec::with_capacity(config.points);
    for _ in 0..config.points {
        let w = WParam::random(p, q, 0.7, &mut rng)?;
        let mu: Vec<Complex64> = (0..p).map(|_| complex_normal(&mut rng)).collect();
        residuals.push(pullback_residual_default(&w, &mu)?);
    }
    for (i, v) in residuals.iter().enumerate() {
        table.push(vec!["pullback".into(), i.to_string(), num(*v)]);
    }
    records.push(CheckRecord::at_most(
        "pullback_residual",
        LemmaTag::PullbackDecomposition,
        max(&residuals),
        config.tolerance("pullback_residual", 1e-5),
    ));

    if p == 1 && q == 1 {
        let fs: Vec<f64> = (0..config.points)
            .map(|_| {
                let mu = complex_normal(&mut rng) * 2.0;
                let g = metric_closed_form(&CMatrix::diagonal(&[mu]));
                (g[(0, 0)].re - (1.0 + mu.norm_sqr()).powi(-2)).abs()
            })
            .collect();
        records.push(CheckRecord::at_most(
            "fubini_study_agreement",
            LemmaTag::PullbackDecomposition,
            max(&fs),
            config.tolerance("fubini_study_agreement", 1e-8),
        ));
    }

    let (mut bound_violations, mut combined_violations) = (0u64, 0u64);
    for i in 0..config.samples {
        // scales from 1e-2 to 1e2
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let w = WParam::random(p, q, scale, &mut rng)?;
        let mu: Vec<Complex64> = (0..p).map(|_| complex_normal(&mut rng) * scale).collect();
        if !gram_bounds(&w, &mu)?.holds(1e-12) {
            bound_violations += 1;
        }
        let alpha = rng.random_range(0.0..1.0f64).max(1e-6);
        let kappa = rng.random_range(0.0..10.0f64).max(1e-6);
        let (lhs, rhs) = combined_bound_logs(&w, &mu, alpha, kappa)?;
        if lhs > rhs + 1e-12 * rhs.abs().max(1.0) {
            combined_violations += 1;
        }
        if i < 1000 {
            table.push(vec!["gram_over_w_bound".into(), i.to_string(), num(gram_bounds(&w, &mu)?.gram_det / (1.0 + w.norm_sq()))]);
        }
    }
    records.push(
        CheckRecord::at_most("gram_bound_violations", LemmaTag::GramInequalities, bound_violations as f64, 0.0)
            .with_note(format!("{} samples", config.samples)),
    );
    records.push(CheckRecord::at_most("combined_bound_violations", LemmaTag::GramInequalities, combined_violations as f64, 0.0));

    let mut dims: Vec<usize> = vec![1, 2, 3, p * (q - 1)];
    dims.retain(|d| *d >= 1);
    dims.sort_unstable();
    dims.dedup();
    let mut worst = 0.0f64;
    let mut flags = true;
    for d in dims {
        let df = d as f64;
        for kappa in [df + 0.5, df + 1.0, df + 2.5, 2.0 * df + 3.0] {
            // Γ(κ-d)/Γ(κ) = 1/Π_{j=1..d}(κ-j)
            let reference = PI.powi(d as i32) / (1..=d).map(|j| kappa - j as f64).product::<f64>();
            let e = w_tail_integral(kappa, d);
            worst = worst.max(e.relative_error(reference));
            table.push(vec![format!("tail_d{d}"), num(kappa), num(e.mean)]);
        }
        flags &= w_tail_integral(df, d).divergent && w_tail_integral(df - 0.5, d).divergent;
    }
    records.push(CheckRecord::at_most("tail_integral", LemmaTag::TailIntegral, worst, config.tolerance("tail_integral", 1e-6)));
    records.push(CheckRecord::holds("tail_integral_divergence_flag", LemmaTag::TailIntegral, flags));
    Ok((records, table))
}
