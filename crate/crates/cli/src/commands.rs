//! Subcommand bodies. Each one builds a [`Report`] plus extra artifacts and
//! leaves writing and exit-status mapping to `main`.

use blowup_core::config::{InitialData, RunConfig};
use blowup_core::error::{ConfigError, ExperimentError};
use blowup_core::experiments::{
    approx_sequence, cauchy_in_n, check_resolution, exterior_convergence, forward_blowup,
    log_spaced_times, profile_rates, validate_box, NormSeries, SequenceResult,
};
use blowup_core::field::{
    gagliardo_nirenberg_ratio, lp_norm, ComplexField, Grid, RegionMask, SpectralOps,
};
use blowup_core::model::{remainder_sup_scan, sample_pairs, survey_inequalities, ModelParams};
use blowup_core::profile::{check_hypotheses, theoretical_exponents, Profile};
use blowup_core::report::{Check, Report};
use blowup_core::solver::{dissipation_residual, gradient_law_excess, Direction, Outcome, Solver};
use num_complex::Complex64;

/// Why a subcommand stopped before producing a verdict.
#[derive(Debug)]
pub enum Failure {
    /// Bad or inadmissible input: exit 1.
    Config(String),
    /// The run itself failed: exit 2.
    Run(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::DegenerateWindow(_)
            | ExperimentError::ResolutionInsufficient(_)
            | ExperimentError::InvalidSchedule(_)
            | ExperimentError::EmptyMask => Failure::Config(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn run_err(e: impl std::fmt::Display) -> Failure {
    Failure::Run(e.to_string())
}

pub struct Context {
    pub config: RunConfig,
    pub force: bool,
    pub jobs: usize,
}

/// A report and any extra files, written relative to the output directory.
pub struct Output {
    pub report: Report,
    pub files: Vec<(String, String)>,
}

fn new_report(ctx: &Context, title: &str) -> Report {
    let mut report = Report::new(title);
    report.echo_config(&ctx.config.to_toml());
    report.result("run.force", ctx.force);
    report.result("run.jobs", ctx.jobs);
    report
}

/// Builds the profile, refusing hypothesis failures unless `--force` is set.
fn gated_profile(ctx: &Context, report: &mut Report) -> Result<Profile, Failure> {
    let spec = ctx.config.profile_spec()?;
    report.number("resolved.profile.rho", spec.rho);
    let hyp = check_hypotheses(&spec, ctx.config.experiment.hypothesis_tolerance);
    if let Some(bad) = hyp.first_failure() {
        if !ctx.force {
            return Err(Failure::Config(format!(
                "profile hypothesis `{}` fails ({}); run profile-check for details or pass --force",
                bad.name, bad.detail
            )));
        }
        report.result("run.forced_hypothesis", &bad.name);
        return Profile::forced(spec).map_err(|e| Failure::Config(e.to_string()));
    }
    Profile::new(spec).map_err(|e| Failure::Config(e.to_string()))
}

pub fn profile_check(ctx: &Context) -> Result<Output, Failure> {
    let mut report = new_report(ctx, "profile-check");
    let spec = ctx.config.profile_spec()?;
    let hyp = check_hypotheses(&spec, ctx.config.experiment.hypothesis_tolerance);
    for (i, c) in hyp.checks.iter().enumerate() {
        report.check(Check::holds(
            &format!("hypothesis.{i:02}"),
            c.passed,
            &format!("{} ({})", c.name, c.detail),
        ));
    }
    report.number("resolved.profile.rho", spec.rho);
    report.number("profile.k_min", spec.k_min());
    report.number("profile.nu", spec.nu());
    for (j, eta) in hyp.eta0.iter().enumerate() {
        report.number(format!("profile.eta0.{j}"), *eta);
    }
    for (j, r) in hyp.local_ratio_max.iter().enumerate() {
        for (order, v) in r.iter().enumerate() {
            report.number(
                format!("profile.local_ratio_max.{j}.order{}", order + 1),
                *v,
            );
        }
    }
    let targets = theoretical_exponents(&spec);
    report.number("targets.l2_exponent", targets.l2_exponent);
    report.number("targets.grad_exponent", targets.grad_exponent);
    report.number("targets.theta", targets.theta);
    report.number(
        "targets.laplacian_bound_exponent",
        targets.laplacian_bound_exponent,
    );
    let profile = Profile::forced(spec).map_err(|e| Failure::Config(e.to_string()))?;
    let grid = ctx.config.grid()?;
    let b = validate_box(&profile, &grid)?;
    report.number("box.boundary_magnitude", b.boundary_magnitude);
    report.number("box.min_margin", b.min_margin);
    let t_late = ctx.config.experiment.rate_window[1];
    report.number("grid.spacing", grid.spacing());
    report.number(
        "grid.core_width_at_rate_window_end",
        profile.core_width(t_late),
    );
    match check_resolution(&profile, &grid, t_late) {
        Ok(per_core) => report.number("grid.points_per_core_at_rate_window_end", per_core),
        Err(e) => report.result("grid.points_per_core_at_rate_window_end", e),
    }
    Ok(Output {
        report,
        files: Vec::new(),
    })
}

fn gaussian(grid: &Grid, amplitude: f64, width: f64) -> ComplexField {
    ComplexField::inject(grid, |x| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        Complex64::new(amplitude * (-0.5 * r2 / (width * width)).exp(), 0.0)
    })
}

pub fn simulate(ctx: &Context, direction: Option<Direction>) -> Result<Output, Failure> {
    let sim = &ctx.config.simulate;
    let direction = direction.unwrap_or(sim.direction);
    if direction.sign() * (sim.t_to - sim.t_from) <= 0.0 {
        return Err(Failure::Config(format!(
            "config key `simulate.t_to`: a {direction} run cannot go from {} to {}",
            sim.t_from, sim.t_to
        )));
    }
    let mut report = new_report(ctx, "simulate");
    report.result("run.direction", direction);
    let grid = ctx.config.grid()?;
    let params = ctx.config.model_params()?;
    let initial = match sim.initial {
        InitialData::Gaussian => gaussian(&grid, sim.amplitude, sim.width),
        InitialData::Profile => gated_profile(ctx, &mut report)?
            .field(sim.t_from, &grid)
            .map_err(run_err)?,
    };
    let mut solver = Solver::new(params, SpectralOps::new(&grid));
    let run = solver
        .integrate(
            &initial,
            sim.t_from,
            sim.t_to,
            direction,
            &ctx.config.solver,
            |_, _| {},
        )
        .map_err(run_err)?;
    report.result("run.steps", run.steps);
    report.number("run.t_end", run.t_end);
    match run.outcome {
        Outcome::Completed => report.result("run.outcome", "completed"),
        Outcome::BlowupDetected { t, linf } => {
            report.result("run.outcome", "blowup-detected");
            report.number("run.blowup_t", t);
            report.number("run.blowup_linf", linf);
        }
    }
    if let Some(last) = run.monitor.records.last() {
        report.number("final.l2", last.l2);
        report.number("final.grad_l2", last.grad_l2);
        report.number("final.linf", last.linf);
    }
    let mut l2 = NormSeries::new("l2");
    let mut grad = NormSeries::new("grad_l2");
    for r in &run.monitor.records {
        l2.push(r.t, r.l2);
        grad.push(r.t, r.grad_l2);
    }
    report.add_series(l2, None);
    report.add_series(grad, None);
    if direction == Direction::Backward {
        let tol = 1e-8;
        let violation = run.monitor.monotonicity_violation(tol);
        let rule =
            format!("l2 and grad_l2 nonincreasing in elapsed time, relative tolerance {tol:e}");
        report.check(Check::holds(
            "backward.monotone",
            violation.is_none(),
            &rule,
        ));
        if let Some(v) = violation {
            report.result(
                "backward.first_violation",
                format!("{} at record {}", v.quantity, v.index),
            );
        }
        if ctx.config.solver.monitor_cadence == 1 {
            let res = dissipation_residual(&run.monitor).map_err(run_err)?;
            report.check(Check::below("backward.mass_identity_residual", res, 1e-3));
            let excess = gradient_law_excess(&run.monitor).map_err(run_err)?;
            report.number("backward.gradient_law_excess", excess);
        } else {
            report.result(
                "backward.mass_identity_residual",
                "skipped: needs solver.monitor_cadence = 1",
            );
        }
    }
    let files = vec![
        ("monitor.csv".to_string(), run.monitor.to_csv()),
        ("snapshot_final.csv".to_string(), run.field.to_csv()),
    ];
    Ok(Output { report, files })
}

fn run_sequence(ctx: &Context, profile: &Profile, grid: &Grid) -> Result<SequenceResult, Failure> {
    let e = &ctx.config.experiment;
    Ok(approx_sequence(
        profile,
        grid,
        &e.schedule(),
        &ctx.config.solver,
        &e.sequence_options(),
    )?)
}

pub fn approx_seq(ctx: &Context) -> Result<Output, Failure> {
    let mut report = new_report(ctx, "approx-seq");
    let profile = gated_profile(ctx, &mut report)?;
    let grid = ctx.config.grid()?;
    validate_box(&profile, &grid)?;
    let last_n = *ctx.config.experiment.ns.last().expect("schedule validated");
    let t_last = -1.0 / last_n as f64;
    report.number(
        "grid.points_per_core_at_last_t_n",
        check_resolution(&profile, &grid, t_last)?,
    );
    let result = run_sequence(ctx, &profile, &grid)?;
    let mut files = Vec::new();
    for run in &result.runs {
        let key = format!("n{}", run.n);
        report.number(format!("{key}.t_n"), run.t_n);
        report.result(format!("{key}.steps"), run.steps);
        report.number(format!("{key}.eps_initial"), run.initial_error);
        report.number(format!("{key}.eps_t0"), run.error_at_t0);
        report.fit(&format!("{key}.mu"), &run.mu_fit);
        report.check(Check::below(
            &format!("{key}.eps_at_t_n"),
            run.initial_error,
            1e-12,
        ));
        report.check(Check::above(
            &format!("{key}.mu_positive"),
            run.mu_fit.slope,
            0.0,
        ));
        report.check(Check::below(
            &format!("{key}.mu_relative_stderr"),
            run.mu_fit.stderr / run.mu_fit.slope.abs(),
            0.1,
        ));
        let gap = NormSeries {
            label: run.error_series.label.clone(),
            samples: run
                .error_series
                .samples
                .iter()
                .map(|&(t, v)| (run.t_n - t, v))
                .collect(),
        };
        report.add_series_against(gap, Some(run.mu_fit), "gap");
        files.push((format!("snapshot_t0_{key}.csv"), run.final_field.to_csv()));
    }
    report.number("mu.mean", result.mu_mean);
    report.number("mu.stderr_max", result.mu_stderr_max);
    report.check(Check::holds(
        "eps_t0_strictly_decreasing_in_n",
        result.errors_strictly_decreasing(),
        "||eps_n(t0)||_H1 strictly decreasing in n",
    ));
    let cauchy = cauchy_in_n(&result)?;
    for p in &cauchy.pairs {
        report.number(format!("cauchy.n{}_n{}", p.n, p.m), p.distance);
    }
    report.check(Check::holds(
        "cauchy.consecutive_decreasing",
        cauchy.consecutive_decreasing(),
        "||u_n - u_next||_H1(t0) decreasing along the schedule",
    ));
    report.check(Check::holds(
        "cauchy.triangle",
        cauchy.triangle_holds(),
        "||u_n - u_m|| <= ||eps_n|| + ||eps_m|| at t0",
    ));
    if ctx.config.experiment.grid_doubling {
        let fine = Grid::new(grid.dimension, grid.length, 2 * grid.points).map_err(|e| {
            Failure::Config(format!(
                "config key `experiment.grid_doubling`: cannot double the grid: {e}"
            ))
        })?;
        let fine_result = run_sequence(ctx, &profile, &fine)?;
        let worst = result
            .runs
            .iter()
            .zip(&fine_result.runs)
            .map(|(a, b)| (a.error_at_t0 - b.error_at_t0).abs() / b.error_at_t0)
            .fold(0.0, f64::max);
        report.check(Check::below(
            "grid_doubling.eps_t0_relative_change",
            worst,
            0.1,
        ));
    }
    if ctx.config.experiment.forward {
        let last = result.runs.last().expect("schedule validated");
        let track = forward_blowup(&profile, &last.final_field, result.t0, &ctx.config.solver)?;
        let targets = theoretical_exponents(profile.spec());
        report.result("forward.start_n", last.n);
        report.result("forward.steps", track.steps);
        report.result("forward.blowup_detected", track.blowup_detected);
        report.number("forward.t_stop", track.t_stop);
        report.number("forward.predicted_stop", track.predicted_stop);
        report.fit("forward.l2", &track.l2_fit);
        report.fit("forward.grad", &track.grad_fit);
        report.check(Check::below(
            "forward.max_relative_h1_error",
            track.max_relative_error,
            0.1,
        ));
        report.check(Check::slope(
            "forward.l2_slope",
            &track.l2_fit,
            -targets.l2_exponent,
            0.05,
        ));
        report.add_series(track.relative_error, None);
        report.add_series(track.l2, Some(track.l2_fit));
        report.add_series(track.grad, Some(track.grad_fit));
    }
    Ok(Output { report, files })
}

pub fn rates(ctx: &Context) -> Result<Output, Failure> {
    let mut report = new_report(ctx, "rates");
    let profile = gated_profile(ctx, &mut report)?;
    let grid = ctx.config.grid()?;
    let e = &ctx.config.experiment;
    validate_box(&profile, &grid)?;
    let window = (e.rate_window[0], e.rate_window[1]);
    report.number(
        "grid.points_per_core_at_window_end",
        check_resolution(&profile, &grid, window.1)?,
    );
    let times = log_spaced_times(window.0, window.1, e.rate_samples);
    let r = profile_rates(&profile, &grid, &times, window)?;
    report.number("targets.l2_exponent", r.targets.l2_exponent);
    report.number("targets.grad_exponent", r.targets.grad_exponent);
    report.number(
        "targets.laplacian_bound_exponent",
        r.targets.laplacian_bound_exponent,
    );
    report.fit("fit.l2", &r.l2_fit);
    report.fit("fit.grad", &r.grad_fit);
    report.fit("fit.laplacian", &r.laplacian_fit);
    report.number("plateau.l2", r.plateau_l2);
    report.number("plateau.grad", r.plateau_grad);
    report.check(Check::slope(
        "slope.l2",
        &r.l2_fit,
        -r.targets.l2_exponent,
        0.01,
    ));
    report.check(Check::slope(
        "slope.grad",
        &r.grad_fit,
        -r.targets.grad_exponent,
        0.01,
    ));
    report.check(Check::slope(
        "slope.laplacian",
        &r.laplacian_fit,
        -r.targets.laplacian_bound_exponent,
        0.02,
    ));
    report.check(Check::below(
        "plateau.l2_variation",
        r.plateau_variation,
        0.02,
    ));
    let mut ext_times = e.exterior_times.clone();
    ext_times.sort_by(f64::total_cmp);
    let ext = exterior_convergence(&profile, &grid, &ext_times, e.exterior_radius)?;
    for (t, v) in &ext.samples {
        report.number(format!("exterior.t{t:e}"), *v);
    }
    let decreasing = ext.samples.windows(2).all(|w| w[1].1 < w[0].1);
    report.check(Check::holds(
        "exterior.decreasing_toward_blowup",
        decreasing,
        "H1 distance to the limit profile off the blow-up balls decreases as t -> 0",
    ));
    report.add_series(r.l2, Some(r.l2_fit));
    report.add_series(r.grad, Some(r.grad_fit));
    report.add_series(r.laplacian, Some(r.laplacian_fit));
    report.add_series(ext, None);
    Ok(Output {
        report,
        files: Vec::new(),
    })
}

/// Field suites run on a small periodic grid in the model dimension.
const SUITE_POINTS: usize = 32;
const SUITE_FIELDS: u64 = 8;

pub fn invariants(ctx: &Context) -> Result<Output, Failure> {
    let mut report = new_report(ctx, "invariants");
    let seed = ctx.config.seed;
    let mut alphas = vec![2.0, 2.5, 3.0, ctx.config.model.alpha];
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    for &alpha in &alphas {
        let p = ModelParams::new(1, alpha).map_err(|e| Failure::Config(e.to_string()))?;
        let key = format!("alpha{alpha}");
        let survey = survey_inequalities(&p, &sample_pairs(seed, 100_000, 10.0));
        report.check(Check::above(
            &format!("{key}.min_monotonicity_gap"),
            survey.min_gap,
            -1e-12,
        ));
        let sup = remainder_sup_scan(&p, 1000);
        report.number(format!("{key}.remainder_sup.dz"), sup.dz);
        report.number(format!("{key}.remainder_sup.dzbar"), sup.dzbar);
        let corpora: Vec<_> = (1..=3)
            .map(|i| survey_inequalities(&p, &sample_pairs(seed.wrapping_add(i), 20_000, 10.0)))
            .collect();
        let hi = |f: fn(&blowup_core::model::InequalitySurvey) -> f64| {
            corpora.iter().map(f).fold(0.0, f64::max)
        };
        let lo = |f: fn(&blowup_core::model::InequalitySurvey) -> f64| {
            corpora.iter().map(f).fold(f64::INFINITY, f64::min)
        };
        let (dz_hi, dzbar_hi) = (hi(|s| s.max_dz_ratio), hi(|s| s.max_dzbar_ratio));
        let (dz_lo, dzbar_lo) = (lo(|s| s.max_dz_ratio), lo(|s| s.max_dzbar_ratio));
        report.number(format!("{key}.remainder_corpus.dz"), dz_hi);
        report.number(format!("{key}.remainder_corpus.dzbar"), dzbar_hi);
        let excess = (dz_hi / sup.dz).max(dzbar_hi / sup.dzbar);
        report.check(Check::below(
            &format!("{key}.remainder_corpus_over_scan"),
            excess,
            1.001,
        ));
        let spread = ((dz_hi - dz_lo) / dz_hi).max((dzbar_hi - dzbar_lo) / dzbar_hi);
        report.check(Check::below(
            &format!("{key}.remainder_seed_spread"),
            spread,
            0.1,
        ));
        let mut fd: f64 = 0.0;
        for (z, dir) in sample_pairs(seed.wrapping_add(7), 5_000, 10.0) {
            if z.norm() < 1e-2 || dir.norm() == 0.0 {
                continue;
            }
            let h = dir / dir.norm() * 1e-6;
            let w = p.wirtinger_derivatives(z);
            let predicted = w.dz * h + w.dzbar * h.conj();
            let actual = p.nonlinearity(z + h) - p.nonlinearity(z);
            fd = fd.max((actual - predicted).norm() / predicted.norm());
        }
        report.check(Check::below(
            &format!("{key}.wirtinger_vs_finite_difference"),
            fd,
            1e-4,
        ));
    }
    let dim = ctx.config.model.dimension;
    match Grid::new(dim, std::f64::consts::TAU, SUITE_POINTS) {
        Ok(grid) => field_suites(&grid, &alphas, seed, &mut report)?,
        Err(e) => report.result("fields.skipped", e),
    }
    Ok(Output {
        report,
        files: Vec::new(),
    })
}

fn field_suites(
    grid: &Grid,
    alphas: &[f64],
    seed: u64,
    report: &mut Report,
) -> Result<(), Failure> {
    let mut ops = SpectralOps::new(grid);
    let full = RegionMask::full(grid);
    let (mut gn, mut parseval, mut mask_gap): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..SUITE_FIELDS {
        let f = ComplexField::random_trigonometric(grid, seed.wrapping_add(i), 6, 4);
        let plain = ops.norms(&f, None).map_err(run_err)?;
        let masked = ops.norms(&f, Some(&full)).map_err(run_err)?;
        mask_gap = mask_gap
            .max((plain.l2 - masked.l2).abs())
            .max((plain.grad_l2 - masked.grad_l2).abs());
        let spectral = ops.spectral_l2(&f);
        parseval = parseval.max((spectral - plain.l2).abs() / plain.l2);
        for &alpha in alphas {
            let a = lp_norm(&f, alpha + 2.0, None).map_err(run_err)?;
            let b = lp_norm(&f, alpha + 2.0, Some(&full)).map_err(run_err)?;
            mask_gap = mask_gap.max((a - b).abs());
            for q in [alpha, 2.0 * alpha - 2.0] {
                let base = match gagliardo_nirenberg_ratio(&mut ops, &f, q) {
                    Ok(v) => v,
                    // θ > 1 in high dimension: the ratio is not defined for this q.
                    Err(_) => continue,
                };
                for lambda in [1e-3, 0.37, 42.0, 1e3] {
                    let scaled = f.scale(Complex64::new(lambda, 0.0));
                    let r = gagliardo_nirenberg_ratio(&mut ops, &scaled, q).map_err(run_err)?;
                    gn = gn.max(((r - base) / base).abs());
                }
            }
        }
    }
    report.check(Check::below("fields.gn_ratio_scaling_change", gn, 1e-10));
    report.check(Check::below(
        "fields.parseval_relative_gap",
        parseval,
        1e-12,
    ));
    report.check(Check::holds(
        "fields.full_mask_matches_unmasked",
        mask_gap == 0.0,
        "norms with the full mask equal the unmasked norms exactly",
    ));
    Ok(())
}
