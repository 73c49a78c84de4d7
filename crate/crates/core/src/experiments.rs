//! Runnable constructions built on the profile and the solver.
//!
//! * [`approx_sequence`]: solutions `u_n` with `u_n(T_n) = U(T_n)`, `T_n = -1/n`,
//!   evolved toward `t0 < T_n`, tracking `ε_n = u_n - U`.
//! * [`cauchy_in_n`]: pairwise distances of the `u_n(t0)`.
//! * [`forward_blowup`]: forward evolution of some `u_n(t0)` until blowup.
//! * [`profile_rates`] and [`fit_rate`]: log-log slopes of profile norms.
//! * [`exterior_distance`]: distance to `φ^{-1/α}` away from the blow-up points.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ExperimentError;
use crate::field::{ComplexField, Grid, RegionMask, SpectralOps};
use crate::profile::{theoretical_exponents, Profile, RateTargets};
use crate::solver::{Direction, Outcome, Solver, SolverConfig};

/// Points required across the blow-up core `(-t)^{1/k_1}`.
pub const MIN_POINTS_PER_CORE: f64 = 16.0;

/// Time-stamped values of one norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormSeries {
    pub label: String,
    /// `(t, value)` pairs.
    pub samples: Vec<(f64, f64)>,
}

impl NormSeries {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, value: f64) {
        self.samples.push((t, value));
    }
}

/// Least-squares power law `value ≈ C x^slope` over a window of `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Fits `log y` against `log x` for the samples with `x` in `[lo, hi]`.
///
/// The window must span at least one decade and contain at least five
/// samples, all with positive values.
pub fn fit_log_log(samples: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit, ExperimentError> {
    let (lo, hi) = window;
    let degenerate = |m: String| Err(ExperimentError::DegenerateWindow(m));
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
        return degenerate(format!(
            "window [{lo}, {hi}] must be positive and increasing"
        ));
    }
    if hi / lo < 10.0 * (1.0 - 1e-12) {
        return degenerate(format!(
            "window [{lo:e}, {hi:e}] spans less than one decade"
        ));
    }
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(x, _)| *x >= lo * (1.0 - 1e-12) && *x <= hi * (1.0 + 1e-12))
        .map(|&(x, y)| (x, y))
        .collect();
    if pts.len() < 5 {
        return degenerate(format!(
            "{} samples inside [{lo:e}, {hi:e}], need 5",
            pts.len()
        ));
    }
    if let Some((x, y)) = pts.iter().find(|(_, y)| !(*y > 0.0 && y.is_finite())) {
        return degenerate(format!("non-positive value {y} at x = {x}"));
    }
    let n = pts.len() as f64;
    let logs: Vec<(f64, f64)> = pts.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = logs
        .iter()
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = if pts.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(RateFit {
        slope,
        intercept,
        stderr,
        window,
        points: pts.len(),
    })
}

/// Slope of `log value` against `log(-t)` for `t` in `[t_lo, t_hi]` (both negative).
pub fn fit_rate(series: &NormSeries, window: (f64, f64)) -> Result<RateFit, ExperimentError> {
    let (t_lo, t_hi) = window;
    if !(t_lo < t_hi && t_hi < 0.0) {
        return Err(ExperimentError::DegenerateWindow(format!(
            "time window [{t_lo}, {t_hi}] must satisfy t_lo < t_hi < 0"
        )));
    }
    let pts: Vec<(f64, f64)> = series
        .samples
        .iter()
        .filter(|(t, _)| *t < 0.0)
        .map(|&(t, v)| (-t, v))
        .collect();
    let mut fit = fit_log_log(&pts, (-t_hi, -t_lo))?;
    fit.window = window;
    Ok(fit)
}

/// `count` times `-(10^{e})` with exponents evenly spaced from `log10(-t_early)`
/// to `log10(-t_late)`.
pub fn log_spaced_times(t_early: f64, t_late: f64, count: usize) -> Vec<f64> {
    let (a, b) = ((-t_early).log10(), (-t_late).log10());
    (0..count)
        .map(|i| -(10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)))
        .collect()
}

/// Geometry of the box relative to the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxReport {
    /// Largest `|U(t)|` on the box faces (bounded by `φ^{-1/α}` there for any `t`).
    pub boundary_magnitude: f64,
    /// Smallest distance from a blow-up point to a box face.
    pub min_margin: f64,
}

/// Reports the boundary magnitude of the limit profile and enforces that every
/// blow-up point lies at least `L/4` from the box faces.
pub fn validate_box(profile: &Profile, grid: &Grid) -> Result<BoxReport, ExperimentError> {
    let half = grid.half_width();
    let mut margin = f64::INFINITY;
    for p in profile.spec().points() {
        for &c in &p {
            margin = margin.min(half - c.abs());
        }
    }
    if margin < 0.25 * grid.length {
        return Err(ExperimentError::ResolutionInsufficient(format!(
            "blow-up points must be at least L/4 = {} from the boundary, closest is {margin}",
            0.25 * grid.length
        )));
    }
    // Sup of φ^{-1/α} over the faces, sampled on the face grid.
    let n = grid.dimension;
    let mut worst: f64 = 0.0;
    let m = grid.points;
    let face_points = m.pow((n - 1) as u32);
    let mut x = vec![0.0; n];
    for axis in 0..n {
        for idx in 0..face_points {
            let mut rest = idx;
            for (d, xi) in x.iter_mut().enumerate() {
                if d == axis {
                    *xi = -half;
                } else {
                    *xi = grid.axis_coordinate(rest % m);
                    rest /= m;
                }
            }
            worst = worst.max(profile.limit(&x));
        }
    }
    Ok(BoxReport {
        boundary_magnitude: worst,
        min_margin: margin,
    })
}

/// Requires [`MIN_POINTS_PER_CORE`] grid points across the core at time `t`.
pub fn check_resolution(profile: &Profile, grid: &Grid, t: f64) -> Result<f64, ExperimentError> {
    let per_core = profile.core_width(t) / grid.spacing();
    if per_core < MIN_POINTS_PER_CORE {
        return Err(ExperimentError::ResolutionInsufficient(format!(
            "{per_core:.1} points across the core (-t)^(1/k_1) = {:.4} at t = {t}, need {MIN_POINTS_PER_CORE}",
            profile.core_width(t)
        )));
    }
    Ok(per_core)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSchedule {
    pub ns: Vec<u32>,
    pub t0: f64,
}

impl Default for SequenceSchedule {
    fn default() -> Self {
        Self {
            ns: vec![4, 8, 16, 32, 64],
            t0: -0.5,
        }
    }
}

impl SequenceSchedule {
    pub fn t_n(n: u32) -> f64 {
        -1.0 / n as f64
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidSchedule(m));
        if self.ns.is_empty() {
            return bad("empty schedule".into());
        }
        if self.ns.contains(&0) {
            return bad("n must be positive".into());
        }
        if !self.ns.windows(2).all(|w| w[0] < w[1]) {
            return bad(format!(
                "n values {:?} must be strictly increasing",
                self.ns
            ));
        }
        let first = Self::t_n(self.ns[0]);
        if !(self.t0 < first) {
            return bad(format!("t0 = {} must precede T_n = {first}", self.t0));
        }
        Ok(())
    }
}

/// Options for [`approx_sequence`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceOptions {
    /// Window of `T_n - t` used to fit `‖ε_n(t)‖_{H¹} ~ (T_n - t)^μ`.
    pub mu_window: (f64, f64),
    /// `ε_n` samples per decade of `T_n - t`.
    pub samples_per_decade: usize,
}

impl Default for SequenceOptions {
    fn default() -> Self {
        Self {
            mu_window: (1e-3, 1e-1),
            samples_per_decade: 20,
        }
    }
}

/// One member of the approximate-solution sequence.
#[derive(Debug, Clone)]
pub struct SequenceRun {
    pub n: u32,
    pub t_n: f64,
    /// `‖ε_n(T_n)‖_{H¹}`.
    pub initial_error: f64,
    /// `(t, ‖ε_n(t)‖_{H¹})`.
    pub error_series: NormSeries,
    pub error_at_t0: f64,
    pub mu_fit: RateFit,
    /// `u_n(t0)`.
    pub final_field: ComplexField,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct SequenceResult {
    pub t0: f64,
    pub runs: Vec<SequenceRun>,
    /// Mean of the per-run `μ`.
    pub mu_mean: f64,
    /// Largest per-run slope standard error.
    pub mu_stderr_max: f64,
}

impl SequenceResult {
    pub fn errors_strictly_decreasing(&self) -> bool {
        self.runs
            .windows(2)
            .all(|w| w[1].error_at_t0 < w[0].error_at_t0)
    }
}

/// `‖a - b‖_{H¹}`.
pub fn h1_distance(
    ops: &mut SpectralOps,
    a: &ComplexField,
    b: &ComplexField,
) -> Result<f64, ExperimentError> {
    Ok(ops.norms(&a.diff(b)?, None)?.h1)
}

fn run_member(
    profile: &Profile,
    grid: &Grid,
    n: u32,
    t0: f64,
    config: &SolverConfig,
    options: &SequenceOptions,
) -> Result<SequenceRun, ExperimentError> {
    let t_n = SequenceSchedule::t_n(n);
    let params = profile.spec().params;
    let mut solver = Solver::new(params, SpectralOps::new(grid));
    let mut ops = SpectralOps::new(grid);
    let initial = profile.field(t_n, grid)?;
    let mut series = NormSeries::new(format!("eps_h1_n{n}"));
    let step = 10f64.powf(1.0 / options.samples_per_decade.max(1) as f64);
    let mut next_gap = options.mu_window.0 / step.powi(options.samples_per_decade as i32);
    let mut failure = None;
    let run = solver.integrate(&initial, t_n, t0, Direction::Backward, config, |t, u| {
        let gap = t_n - t;
        if gap != 0.0 && gap < next_gap && t != t0 {
            return;
        }
        while next_gap <= gap {
            next_gap *= step;
        }
        let eps = profile
            .field(t, grid)
            .map_err(ExperimentError::from)
            .and_then(|ut| h1_distance(&mut ops, u, &ut));
        match eps {
            Ok(e) => series.push(t, e),
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let initial_error = series.samples.first().map_or(f64::NAN, |s| s.1);
    let error_at_t0 = series.samples.last().map_or(f64::NAN, |s| s.1);
    let pts: Vec<(f64, f64)> = series.samples.iter().map(|&(t, v)| (t_n - t, v)).collect();
    let mu_fit = fit_log_log(&pts, options.mu_window)?;
    Ok(SequenceRun {
        n,
        t_n,
        initial_error,
        error_series: series,
        error_at_t0,
        mu_fit,
        final_field: run.field,
        steps: run.steps,
    })
}

/// Runs the schedule in parallel, one backward integration per `n`.
///
/// Each run starts from `U(T_n)` sampled on the grid and is integrated toward
/// `t0`; `‖ε_n(t)‖_{H¹}` is sampled log-uniformly in `T_n - t`.
pub fn approx_sequence(
    profile: &Profile,
    grid: &Grid,
    schedule: &SequenceSchedule,
    config: &SolverConfig,
    options: &SequenceOptions,
) -> Result<SequenceResult, ExperimentError> {
    schedule.validate()?;
    for &n in &schedule.ns {
        check_resolution(profile, grid, SequenceSchedule::t_n(n))?;
    }
    let runs: Vec<SequenceRun> = schedule
        .ns
        .par_iter()
        .map(|&n| run_member(profile, grid, n, schedule.t0, config, options))
        .collect::<Result<_, _>>()?;
    let mu_mean = runs.iter().map(|r| r.mu_fit.slope).sum::<f64>() / runs.len() as f64;
    let mu_stderr_max = runs.iter().map(|r| r.mu_fit.stderr).fold(0.0, f64::max);
    Ok(SequenceResult {
        t0: schedule.t0,
        runs,
        mu_mean,
        mu_stderr_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyPair {
    pub n: u32,
    pub m: u32,
    /// `‖u_n(t0) - u_m(t0)‖_{H¹}`.
    pub distance: f64,
    /// `‖ε_n(t0)‖_{H¹} + ‖ε_m(t0)‖_{H¹}`.
    pub triangle_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyReport {
    /// Every unordered pair of runs.
    pub pairs: Vec<CauchyPair>,
    /// Pairs of schedule neighbors, in schedule order.
    pub consecutive: Vec<CauchyPair>,
    pub max_distance: f64,
}

impl CauchyReport {
    pub fn consecutive_decreasing(&self) -> bool {
        self.consecutive
            .windows(2)
            .all(|w| w[1].distance < w[0].distance)
    }

    /// Every distance within the triangle bound (up to rounding in the norms).
    pub fn triangle_holds(&self) -> bool {
        self.pairs
            .iter()
            .all(|p| p.distance <= p.triangle_bound * (1.0 + 8.0 * f64::EPSILON))
    }
}

pub fn cauchy_in_n(result: &SequenceResult) -> Result<CauchyReport, ExperimentError> {
    let Some(first) = result.runs.first() else {
        return Ok(CauchyReport {
            pairs: Vec::new(),
            consecutive: Vec::new(),
            max_distance: 0.0,
        });
    };
    let mut ops = SpectralOps::new(first.final_field.grid());
    let mut pairs = Vec::new();
    let mut consecutive = Vec::new();
    for (i, a) in result.runs.iter().enumerate() {
        for (j, b) in result.runs.iter().enumerate().skip(i + 1) {
            let pair = CauchyPair {
                n: a.n,
                m: b.n,
                distance: h1_distance(&mut ops, &a.final_field, &b.final_field)?,
                triangle_bound: a.error_at_t0 + b.error_at_t0,
            };
            if j == i + 1 {
                consecutive.push(pair);
            }
            pairs.push(pair);
        }
    }
    let max_distance = pairs.iter().map(|p| p.distance).fold(0.0, f64::max);
    Ok(CauchyReport {
        pairs,
        consecutive,
        max_distance,
    })
}

/// `‖u - φ^{-1/α}‖_{H¹}` over the points farther than `radius` from every
/// blow-up point. The gradient of `u` is spectral on the whole grid, the
/// gradient of the limit profile closed form.
pub fn exterior_distance(
    ops: &mut SpectralOps,
    profile: &Profile,
    field: &ComplexField,
    radius: f64,
) -> Result<f64, ExperimentError> {
    let grid = *field.grid();
    let mask = RegionMask::exterior_of_balls(&grid, &profile.spec().points(), radius);
    if mask.count() == 0 {
        return Err(ExperimentError::EmptyMask);
    }
    let grad = ops.gradient(field);
    let mut x = vec![0.0; grid.dimension];
    let mut acc = 0.0;
    for (idx, u) in field.values().iter().enumerate() {
        if !mask.contains(idx) {
            continue;
        }
        grid.coordinates_into(idx, &mut x);
        let (f, gf) = profile.limit_with_gradient(&x);
        acc += (u - Complex64::new(f, 0.0)).norm_sqr();
        for (axis, d) in grad.iter().enumerate() {
            acc += (d.values()[idx] - Complex64::new(gf[axis], 0.0)).norm_sqr();
        }
    }
    Ok((grid.cell_volume() * acc).sqrt())
}

/// Exterior distance of the closed-form `U(t)` at each time.
pub fn exterior_convergence(
    profile: &Profile,
    grid: &Grid,
    times: &[f64],
    radius: f64,
) -> Result<NormSeries, ExperimentError> {
    let mut ops = SpectralOps::new(grid);
    let mut series = NormSeries::new(format!("exterior_h1_r{radius}"));
    for &t in times {
        let u = profile.field(t, grid)?;
        series.push(t, exterior_distance(&mut ops, profile, &u, radius)?);
    }
    Ok(series)
}

/// Norms of the closed-form profile over a set of times, with slopes and the
/// rescaled `L²` plateau.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRates {
    pub targets: RateTargets,
    pub l2: NormSeries,
    pub grad: NormSeries,
    pub laplacian: NormSeries,
    pub l2_fit: RateFit,
    pub grad_fit: RateFit,
    pub laplacian_fit: RateFit,
    /// `(max - min) / mean` of `(-t)^{l2_exponent} ‖U(t)‖_{L²}` over the last decade.
    pub plateau_variation: f64,
    /// Mean of the rescaled `L²` norm over the last decade (measured limit `a`).
    pub plateau_l2: f64,
    /// Mean of `(-t)^{grad_exponent} ‖∇U(t)‖_{L²}` over the last decade (measured `b`).
    pub plateau_grad: f64,
}

/// `‖U‖` and `‖∇U‖` come from the sampled profile with spectral derivatives;
/// `‖ΔU‖` from the closed-form Laplacian.
pub fn profile_rates(
    profile: &Profile,
    grid: &Grid,
    times: &[f64],
    window: (f64, f64),
) -> Result<ProfileRates, ExperimentError> {
    let targets = theoretical_exponents(profile.spec());
    let mut ops = SpectralOps::new(grid);
    let mut l2 = NormSeries::new("U_l2");
    let mut grad = NormSeries::new("U_grad_l2");
    let mut lap = NormSeries::new("U_laplacian_l2");
    for &t in times {
        let u = profile.field(t, grid)?;
        let norms = ops.norms(&u, None)?;
        l2.push(t, norms.l2);
        grad.push(t, norms.grad_l2);
        let d = profile.derivative_fields(t, grid)?;
        lap.push(t, ops.norms(&d.laplacian, None)?.l2);
    }
    let l2_fit = fit_rate(&l2, window)?;
    let grad_fit = fit_rate(&grad, window)?;
    let laplacian_fit = fit_rate(&lap, window)?;
    let last_decade = (window.1 * 10.0, window.1);
    let rescaled = |s: &NormSeries, e: f64| -> Vec<f64> {
        s.samples
            .iter()
            .filter(|(t, _)| *t >= last_decade.0 && *t <= last_decade.1)
            .map(|(t, v)| (-t).powf(e) * v)
            .collect()
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let a = rescaled(&l2, targets.l2_exponent);
    let b = rescaled(&grad, targets.grad_exponent);
    let hi = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = a.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ProfileRates {
        targets,
        plateau_variation: (hi - lo) / mean(&a),
        plateau_l2: mean(&a),
        plateau_grad: mean(&b),
        l2,
        grad,
        laplacian: lap,
        l2_fit,
        grad_fit,
        laplacian_fit,
    })
}

/// Result of a forward run started from a sequence member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackingReport {
    pub t_start: f64,
    /// Time at which `‖u‖_{L∞}` crossed the threshold (or the final time).
    pub t_stop: f64,
    pub blowup_detected: bool,
    /// Stop time of the ODE profile at the same threshold, `-threshold^{-α}/α`.
    pub predicted_stop: f64,
    /// `(t, ‖u(t) - U(t)‖_{H¹} / ‖U(t)‖_{H¹})`.
    pub relative_error: NormSeries,
    pub l2: NormSeries,
    pub grad: NormSeries,
    pub max_relative_error: f64,
    pub l2_fit: RateFit,
    pub grad_fit: RateFit,
    pub steps: usize,
}

/// Integrates the forward equation from `start` at `t_start` until the blow-up
/// threshold is crossed, comparing with `U` at every record. Slopes are
/// fitted over the last decade of `-t` before the stop.
pub fn forward_blowup(
    profile: &Profile,
    start: &ComplexField,
    t_start: f64,
    config: &SolverConfig,
) -> Result<TrackingReport, ExperimentError> {
    let grid = *start.grid();
    let alpha = profile.alpha();
    let mut solver = Solver::new(profile.spec().params, SpectralOps::new(&grid));
    let mut ops = SpectralOps::new(&grid);
    let mut rel = NormSeries::new("relative_h1_error");
    let mut l2 = NormSeries::new("u_l2");
    let mut grad = NormSeries::new("u_grad_l2");
    let mut failure = None;
    let run = solver.integrate(start, t_start, 0.0, Direction::Forward, config, |t, u| {
        if t >= 0.0 {
            return;
        }
        let res = profile
            .field(t, &grid)
            .map_err(ExperimentError::from)
            .and_then(|ut| {
                let err = h1_distance(&mut ops, u, &ut)?;
                let reference = ops.norms(&ut, None)?.h1;
                let own = ops.norms(u, None)?;
                Ok((err / reference, own))
            });
        match res {
            Ok((e, own)) => {
                rel.push(t, e);
                l2.push(t, own.l2);
                grad.push(t, own.grad_l2);
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let (t_stop, detected) = match run.outcome {
        Outcome::BlowupDetected { t, .. } => (t, true),
        Outcome::Completed => (run.t_end, false),
    };
    let last_t = l2.samples.last().map_or(t_start, |s| s.0);
    let window = (10.0 * last_t, last_t);
    let l2_fit = fit_rate(&l2, window)?;
    let grad_fit = fit_rate(&grad, window)?;
    let max_relative_error = rel.samples.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(TrackingReport {
        t_start,
        t_stop,
        blowup_detected: detected,
        predicted_stop: -config.blowup_linf_threshold.powf(-alpha) / alpha,
        relative_error: rel,
        l2,
        grad,
        max_relative_error,
        l2_fit,
        grad_fit,
        steps: run.steps,
    })
}
