//! Strang-split time integration of `u_t = iΔu + |u|^α u` in either time
//! direction.
//!
//! Both substeps are exact: the free Schrödinger flow is a Fourier multiplier
//! and the pointwise ODE `u' = |u|^α u` keeps the phase and maps the modulus
//! `r ↦ r (1 ∓ ατ r^α)^{-1/α}`. Integrating toward smaller `t` is the
//! backward equation `v_s = -iΔv - |v|^α v` in the elapsed time `s`.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::field::{ComplexField, SpectralOps};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// `t` increases; the nonlinearity amplifies.
    Forward,
    /// `t` decreases; the nonlinearity damps.
    Backward,
}

impl Direction {
    /// Sign of `dt` in physical time.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

impl std::str::FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            other => Err(format!(
                "unknown direction `{other}` (expected forward or backward)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub dt_max: f64,
    /// `dt ≤ cfl_amp · ‖u‖_{L∞}^{-α}`.
    pub cfl_amp: f64,
    pub dt_min: f64,
    /// Forward runs stop once `‖u‖_{L∞}` exceeds this.
    pub blowup_linf_threshold: f64,
    /// Accepted steps between monitor records.
    pub monitor_cadence: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_max: 1e-4,
            cfl_amp: 0.1,
            dt_min: 1e-12,
            blowup_linf_threshold: 1e3,
            monitor_cadence: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidConfig(m));
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max && self.dt_max.is_finite()) {
            return bad(format!(
                "need 0 < dt_min <= dt_max, got {} and {}",
                self.dt_min, self.dt_max
            ));
        }
        if !(self.cfl_amp > 0.0 && self.cfl_amp <= 1.0) {
            return bad(format!("cfl_amp = {} outside (0, 1]", self.cfl_amp));
        }
        if !(self.blowup_linf_threshold > 0.0) {
            return bad(format!(
                "blowup_linf_threshold = {} must be positive",
                self.blowup_linf_threshold
            ));
        }
        if self.monitor_cadence == 0 {
            return bad("monitor_cadence must be at least 1".into());
        }
        Ok(())
    }
}

/// Norms recorded at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRecord {
    pub t: f64,
    pub l2: f64,
    /// `‖∇u‖_{L²}`; not part of the CSV, recovered from `h1` and `l2` on load.
    pub grad_l2: f64,
    pub h1: f64,
    pub linf: f64,
    /// `‖u‖_{L^{α+2}}^{α+2}`.
    pub lp_alpha2: f64,
    /// `∫ |u|^α |∇u|²`.
    pub dissipation: f64,
}

pub const MONITOR_CSV_HEADER: &str = "t,l2,h1,linf,lp_alpha2,dissipation";

/// Time series recorded by one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMonitor {
    pub direction: Direction,
    /// `None` when the cadence is unknown (series loaded from CSV).
    pub cadence: Option<usize>,
    pub records: Vec<MonitorRecord>,
}

impl StepMonitor {
    pub fn new(direction: Direction, cadence: usize) -> Self {
        Self {
            direction,
            cadence: Some(cadence),
            records: Vec::new(),
        }
    }

    pub fn with_cadence(mut self, cadence: usize) -> Self {
        self.cadence = Some(cadence);
        self
    }

    /// Elapsed evolution time of each record.
    pub fn elapsed(&self) -> Vec<f64> {
        let t0 = self.records.first().map_or(0.0, |r| r.t);
        let sign = self.direction.sign();
        self.records.iter().map(|r| sign * (r.t - t0)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(MONITOR_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                r.t, r.l2, r.h1, r.linf, r.lp_alpha2, r.dissipation
            );
        }
        out
    }

    /// Parses the CSV written by [`StepMonitor::to_csv`]. The direction is
    /// inferred from the time stamps, which must be strictly monotone.
    pub fn from_csv(text: &str) -> Result<Self, SolverError> {
        let err = |line: usize, message: String| SolverError::MonitorCsv { line, message };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == MONITOR_CSV_HEADER => {}
            _ => return Err(err(1, format!("expected header `{MONITOR_CSV_HEADER}`"))),
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut v = [0.0f64; 6];
            let mut cells = line.split(',');
            for slot in v.iter_mut() {
                let cell = cells
                    .next()
                    .ok_or_else(|| err(lineno, "expected 6 columns".into()))?;
                *slot = cell
                    .trim()
                    .parse()
                    .map_err(|e| err(lineno, format!("`{cell}`: {e}")))?;
                if !slot.is_finite() {
                    return Err(err(lineno, format!("non-finite value `{cell}`")));
                }
            }
            if cells.next().is_some() {
                return Err(err(lineno, "expected 6 columns".into()));
            }
            let [t, l2, h1, linf, lp_alpha2, dissipation] = v;
            if l2 < 0.0 || h1 < l2 || linf < 0.0 {
                return Err(err(
                    lineno,
                    "norms must satisfy 0 <= l2 <= h1 and linf >= 0".into(),
                ));
            }
            records.push(MonitorRecord {
                t,
                l2,
                grad_l2: (h1 * h1 - l2 * l2).max(0.0).sqrt(),
                h1,
                linf,
                lp_alpha2,
                dissipation,
            });
        }
        let direction = match records.as_slice() {
            [a, b, ..] if b.t < a.t => Direction::Backward,
            _ => Direction::Forward,
        };
        let sign = direction.sign();
        for (i, w) in records.windows(2).enumerate() {
            if !(sign * (w[1].t - w[0].t) > 0.0) {
                return Err(err(i + 3, "time stamps must be strictly monotone".into()));
            }
        }
        Ok(Self {
            direction,
            cadence: None,
            records,
        })
    }

    /// First step at which `‖v‖_{L²}` or `‖∇v‖_{L²}` grows by more than
    /// `rel_tol` (relative), or `None` if both are nonincreasing throughout.
    pub fn monotonicity_violation(&self, rel_tol: f64) -> Option<MonotoneViolation> {
        for (i, w) in self.records.windows(2).enumerate() {
            let (a, b) = (&w[0], &w[1]);
            if b.l2 > a.l2 * (1.0 + rel_tol) {
                return Some(MonotoneViolation {
                    index: i + 1,
                    quantity: "l2",
                    before: a.l2,
                    after: b.l2,
                });
            }
            if b.grad_l2 > a.grad_l2 * (1.0 + rel_tol) {
                return Some(MonotoneViolation {
                    index: i + 1,
                    quantity: "grad_l2",
                    before: a.grad_l2,
                    after: b.grad_l2,
                });
            }
        }
        None
    }

    fn require_dense(&self) -> Result<(), SolverError> {
        match self.cadence {
            Some(1) => {}
            other => return Err(SolverError::CadenceNotOne(other.unwrap_or(0))),
        }
        if self.records.len() < 3 {
            return Err(SolverError::InsufficientSamples(self.records.len()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneViolation {
    pub index: usize,
    pub quantity: &'static str,
    pub before: f64,
    pub after: f64,
}

/// Second-order derivative of `f` at interior sample `i` on a nonuniform mesh.
fn central_derivative(s: &[f64], f: &[f64], i: usize) -> f64 {
    let h1 = s[i] - s[i - 1];
    let h2 = s[i + 1] - s[i];
    -h2 / (h1 * (h1 + h2)) * f[i - 1]
        + (h2 - h1) / (h1 * h2) * f[i]
        + h1 / (h2 * (h1 + h2)) * f[i + 1]
}

/// Worst relative mismatch in the mass identity `d/ds ‖v‖² = ∓2‖v‖_{L^{α+2}}^{α+2}`
/// (minus for backward runs), with `d/ds` by central differences of the record.
pub fn dissipation_residual(monitor: &StepMonitor) -> Result<f64, SolverError> {
    monitor.require_dense()?;
    let s = monitor.elapsed();
    let mass: Vec<f64> = monitor.records.iter().map(|r| r.l2 * r.l2).collect();
    let sign = monitor.direction.sign();
    let mut worst: f64 = 0.0;
    for i in 1..s.len() - 1 {
        let rate = central_derivative(&s, &mass, i);
        let source = 2.0 * monitor.records[i].lp_alpha2;
        worst = worst.max((rate - sign * source).abs() / source.max(1.0));
    }
    Ok(worst)
}

/// Largest excess of `d/ds ‖∇v‖² + ∫|v|^α|∇v|²` over interior samples of a
/// backward run; the gradient law says this is `≤ 0` up to discretization error.
pub fn gradient_law_excess(monitor: &StepMonitor) -> Result<f64, SolverError> {
    monitor.require_dense()?;
    let s = monitor.elapsed();
    let energy: Vec<f64> = monitor
        .records
        .iter()
        .map(|r| r.grad_l2 * r.grad_l2)
        .collect();
    let mut worst = f64::NEG_INFINITY;
    for i in 1..s.len() - 1 {
        let rate = central_derivative(&s, &energy, i);
        worst = worst.max(rate + monitor.records[i].dissipation);
    }
    Ok(worst)
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// Reached `t_to`.
    Completed,
    /// Forward run exceeded the blow-up threshold at `t`.
    BlowupDetected { t: f64, linf: f64 },
}

#[derive(Debug, Clone)]
pub struct Integration {
    pub field: ComplexField,
    pub t_end: f64,
    pub steps: usize,
    pub outcome: Outcome,
    pub monitor: StepMonitor,
}

/// Owns the spectral workspace for one grid; one solver per worker.
#[derive(Debug)]
pub struct Solver {
    params: ModelParams,
    ops: SpectralOps,
    phase_dt: f64,
    phase: Vec<Complex64>,
}

impl Solver {
    pub fn new(params: ModelParams, ops: SpectralOps) -> Self {
        Self {
            params,
            ops,
            phase_dt: f64::NAN,
            phase: Vec::new(),
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn ops(&mut self) -> &mut SpectralOps {
        &mut self.ops
    }

    /// Exact free flow of `u_t = iΔu` over signed time `dt`: mode `ξ` is
    /// multiplied by `e^{-i|ξ|² dt}`.
    pub fn linear_step(&mut self, field: &mut ComplexField, dt: f64) {
        if dt == 0.0 {
            return;
        }
        if self.phase_dt != dt {
            self.phase = self
                .ops
                .wavenumber_squared()
                .iter()
                .map(|k2| Complex64::from_polar(1.0, -k2 * dt))
                .collect();
            self.phase_dt = dt;
        }
        let values = field.values_mut();
        self.ops.forward(values);
        for (z, p) in values.iter_mut().zip(&self.phase) {
            *z *= p;
        }
        self.ops.inverse(values);
    }

    /// Exact pointwise flow of `u' = |u|^α u` over `tau ≥ 0` units of time in
    /// the given direction.
    pub fn nonlinear_step_exact(
        &self,
        field: &mut ComplexField,
        tau: f64,
        direction: Direction,
    ) -> Result<(), SolverError> {
        nonlinear_flow(&self.params, field.values_mut(), tau, direction)
    }

    /// Records norms of `field` at time `t`.
    pub fn measure(&mut self, t: f64, field: &ComplexField) -> MonitorRecord {
        let alpha = self.params.alpha();
        let grad = self.ops.gradient(field);
        let w = field.grid().cell_volume();
        let (mut l2, mut g2, mut linf, mut lp, mut diss) = (0.0, 0.0, 0.0f64, 0.0, 0.0);
        for (idx, z) in field.values().iter().enumerate() {
            let r2 = z.norm_sqr();
            let r = r2.sqrt();
            let ra = if r == 0.0 { 0.0 } else { r.powf(alpha) };
            let gz: f64 = grad.iter().map(|d| d.values()[idx].norm_sqr()).sum();
            l2 += r2;
            g2 += gz;
            linf = linf.max(r);
            lp += ra * r2;
            diss += ra * gz;
        }
        MonitorRecord {
            t,
            l2: (w * l2).sqrt(),
            grad_l2: (w * g2).sqrt(),
            h1: (w * (l2 + g2)).sqrt(),
            linf,
            lp_alpha2: w * lp,
            dissipation: w * diss,
        }
    }

    fn strang_step(
        &mut self,
        field: &mut ComplexField,
        tau: f64,
        direction: Direction,
    ) -> Result<(), SolverError> {
        self.nonlinear_step_exact(field, 0.5 * tau, direction)?;
        self.linear_step(field, direction.sign() * tau);
        self.nonlinear_step_exact(field, 0.5 * tau, direction)
    }

    /// Integrates from `t_from` to `t_to` (`t_to < t_from` for backward runs).
    ///
    /// The step is `min(dt_max, cfl_amp ‖u‖_{L∞}^{-α})`, halved on a forward
    /// substep that would cross the pointwise blow-up horizon, and the last
    /// step is truncated to land on `t_to`. `observer` sees every recorded
    /// state, including the initial one.
    pub fn integrate<F>(
        &mut self,
        initial: &ComplexField,
        t_from: f64,
        t_to: f64,
        direction: Direction,
        config: &SolverConfig,
        mut observer: F,
    ) -> Result<Integration, SolverError>
    where
        F: FnMut(f64, &ComplexField),
    {
        config.validate()?;
        if initial.grid() != self.ops.grid() {
            return Err(crate::error::FieldError::GridMismatch.into());
        }
        if !(t_from.is_finite() && t_to.is_finite()) || t_from == t_to {
            return Err(SolverError::InvalidSpan(format!(
                "t_from = {t_from}, t_to = {t_to}"
            )));
        }
        let sign = direction.sign();
        if sign * (t_to - t_from) <= 0.0 {
            return Err(SolverError::InvalidSpan(format!(
                "{direction} run cannot go from {t_from} to {t_to}"
            )));
        }
        let alpha = self.params.alpha();
        let cadence = config.monitor_cadence;
        let mut monitor = StepMonitor::new(direction, cadence);
        let mut u = initial.clone();
        let mut t = t_from;
        let mut steps = 0usize;
        let first = self.measure(t, &u);
        let mut linf = first.linf;
        monitor.records.push(first);
        observer(t, &u);
        let mut outcome = Outcome::Completed;

        loop {
            if direction == Direction::Forward && linf > config.blowup_linf_threshold {
                outcome = Outcome::BlowupDetected { t, linf };
                break;
            }
            let remaining = sign * (t_to - t);
            if remaining <= 0.0 {
                break;
            }
            let horizon = if linf > 0.0 {
                config.cfl_amp * linf.powf(-alpha)
            } else {
                f64::INFINITY
            };
            let mut dt = config.dt_max.min(horizon);
            if dt < config.dt_min {
                return Err(SolverError::StepUnderflow {
                    t,
                    dt,
                    dt_min: config.dt_min,
                });
            }
            let mut last = false;
            // Absorb a remainder that rounding would otherwise leave as a sliver step.
            if dt >= remaining * (1.0 - 1e-6) {
                dt = remaining;
                last = true;
            }
            let next = loop {
                let mut trial = u.clone();
                match self.strang_step(&mut trial, dt, direction) {
                    Ok(()) => break trial,
                    Err(SolverError::ForwardStepBlowup { .. }) => {
                        dt *= 0.5;
                        last = false;
                        if dt < config.dt_min {
                            return Err(SolverError::StepUnderflow {
                                t,
                                dt,
                                dt_min: config.dt_min,
                            });
                        }
                    }
                    Err(e) => return Err(e),
                }
            };
            u = next;
            t = if last { t_to } else { t + sign * dt };
            steps += 1;
            linf = u.linf();
            let crossing = direction == Direction::Forward && linf > config.blowup_linf_threshold;
            if steps.is_multiple_of(cadence) || last || crossing {
                let rec = self.measure(t, &u);
                monitor.records.push(rec);
                observer(t, &u);
            }
            if last {
                break;
            }
        }
        Ok(Integration {
            field: u,
            t_end: t,
            steps,
            outcome,
            monitor,
        })
    }
}

/// Self-convergence of fixed-step runs with `dt`, `dt/2` and `dt/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingOrder {
    /// `‖u_dt - u_{dt/2}‖_{H¹}`.
    pub coarse_gap: f64,
    /// `‖u_{dt/2} - u_{dt/4}‖_{H¹}`.
    pub fine_gap: f64,
    /// `log2(coarse_gap / fine_gap)`.
    pub order: f64,
}

/// Estimates the temporal order by running the same span with the step fixed
/// at `dt`, `dt/2` and `dt/4`. The amplitude limit is at its loosest, so the
/// step stays fixed as long as `dt < ‖u‖_{L∞}^{-α}`.
pub fn splitting_order(
    params: ModelParams,
    initial: &ComplexField,
    t_from: f64,
    t_to: f64,
    direction: Direction,
    dt: f64,
) -> Result<SplittingOrder, SolverError> {
    let grid = *initial.grid();
    let mut solver = Solver::new(params, SpectralOps::new(&grid));
    let mut finals = Vec::with_capacity(3);
    for level in 0..3 {
        let config = SolverConfig {
            dt_max: dt / f64::from(1u32 << level),
            cfl_amp: 1.0,
            monitor_cadence: usize::MAX,
            ..Default::default()
        };
        finals.push(
            solver
                .integrate(initial, t_from, t_to, direction, &config, |_, _| {})?
                .field,
        );
    }
    let mut ops = SpectralOps::new(&grid);
    let coarse_gap = ops.norms(&finals[0].diff(&finals[1])?, None)?.h1;
    let fine_gap = ops.norms(&finals[1].diff(&finals[2])?, None)?.h1;
    Ok(SplittingOrder {
        coarse_gap,
        fine_gap,
        order: (coarse_gap / fine_gap).log2(),
    })
}

fn nonlinear_flow(
    params: &ModelParams,
    values: &mut [Complex64],
    tau: f64,
    direction: Direction,
) -> Result<(), SolverError> {
    if tau == 0.0 {
        return Ok(());
    }
    let alpha = params.alpha();
    let sign = direction.sign();
    if direction == Direction::Forward {
        let linf = values.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if linf > 0.0 {
            let horizon = 1.0 / (alpha * linf.powf(alpha));
            if tau >= horizon {
                return Err(SolverError::ForwardStepBlowup { dt: tau, horizon });
            }
        }
    }
    for z in values.iter_mut() {
        let r2 = z.norm_sqr();
        if r2 == 0.0 {
            continue;
        }
        // r^α = (r²)^{α/2}
        let ra = r2.powf(0.5 * alpha);
        *z *= (1.0 - sign * alpha * tau * ra).powf(-1.0 / alpha);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> ModelParams {
        ModelParams::new(1, 2.0).unwrap()
    }

    fn solver(m: usize, length: f64) -> Solver {
        let grid = Grid::new(1, length, m).unwrap();
        Solver::new(params(), SpectralOps::new(&grid))
    }

    fn gaussian(grid: &Grid, amp: f64) -> ComplexField {
        ComplexField::inject(grid, |x| {
            Complex64::new(amp * (-0.5 * x[0] * x[0]).exp(), 0.0)
        })
    }

    fn random_field(grid: &Grid, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        ComplexField::from_values(grid, vals).unwrap()
    }

    #[test]
    fn linear_step_phases_and_unitarity() {
        let mut s = solver(16, std::f64::consts::TAU);
        let grid = *s.ops().grid();
        let mode = ComplexField::inject(&grid, |x| Complex64::from_polar(1.0, 2.0 * x[0]));
        let mut stepped = mode.clone();
        s.linear_step(&mut stepped, 0.5);
        let factor = Complex64::from_polar(1.0, -2.0);
        for (a, b) in stepped.values().iter().zip(mode.values()) {
            assert!((a - factor * b).norm() < 1e-13);
        }
        let mut same = mode.clone();
        s.linear_step(&mut same, 0.0);
        assert_eq!(same, mode);

        let f = random_field(&grid, 11);
        let before = s.ops().norms(&f, None).unwrap().l2;
        let mut g = f.clone();
        s.linear_step(&mut g, 0.37);
        let after = s.ops().norms(&g, None).unwrap().l2;
        assert!((before - after).abs() < 1e-13 * before);
    }

    #[test]
    fn nonlinear_step_closed_form() {
        let s = solver(8, 1.0);
        let grid = *Grid::new(1, 1.0, 8).as_ref().unwrap();
        let mut f = ComplexField::inject(&grid, |x| {
            if x[0] < 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(1.0, 0.3)
            }
        });
        let mut b = f.clone();
        s.nonlinear_step_exact(&mut f, 0.1, Direction::Forward)
            .unwrap();
        s.nonlinear_step_exact(&mut b, 0.1, Direction::Backward)
            .unwrap();
        let fwd = f.values()[7];
        assert!((fwd.norm() - 0.8f64.powf(-0.5)).abs() < 1e-14);
        assert!((fwd.norm() - 1.118_034_0).abs() < 1e-7);
        assert!((fwd.arg() - 0.3).abs() < 1e-14);
        assert!((b.values()[7].norm() - 0.912_870_9).abs() < 1e-7);
        assert_eq!(f.values()[0], Complex64::new(0.0, 0.0));
        assert_eq!(b.values()[0], Complex64::new(0.0, 0.0));

        let mut g = ComplexField::inject(&grid, |_| Complex64::new(2.0, 0.0));
        assert!(matches!(
            s.nonlinear_step_exact(&mut g, 0.2, Direction::Forward),
            Err(SolverError::ForwardStepBlowup { .. })
        ));
    }

    #[test]
    fn nonlinear_backward_then_forward_is_identity() {
        let s = solver(64, 10.0);
        let grid = *s.ops.grid();
        let f = random_field(&grid, 5).scale(Complex64::new(3.0, 0.0));
        let mut g = f.clone();
        s.nonlinear_step_exact(&mut g, 0.01, Direction::Backward)
            .unwrap();
        s.nonlinear_step_exact(&mut g, 0.01, Direction::Forward)
            .unwrap();
        for (a, b) in g.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            dt_min: 1.0,
            dt_max: 0.1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            cfl_amp: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            monitor_cadence: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn span_validation() {
        let mut s = solver(32, 20.0);
        let grid = *s.ops().grid();
        let u = gaussian(&grid, 1.0);
        let cfg = SolverConfig::default();
        assert!(s
            .integrate(&u, 0.0, 0.0, Direction::Forward, &cfg, |_, _| {})
            .is_err());
        assert!(s
            .integrate(&u, 0.0, 1.0, Direction::Backward, &cfg, |_, _| {})
            .is_err());
        assert!(s
            .integrate(&u, 1.0, 0.0, Direction::Forward, &cfg, |_, _| {})
            .is_err());
    }

    #[test]
    fn lands_exactly_on_target() {
        let mut s = solver(64, 20.0);
        let grid = *s.ops().grid();
        let u = gaussian(&grid, 1.0);
        let cfg = SolverConfig {
            dt_max: 0.003,
            monitor_cadence: 7,
            ..Default::default()
        };
        let run = s
            .integrate(&u, 0.0, -0.1, Direction::Backward, &cfg, |_, _| {})
            .unwrap();
        assert_eq!(run.t_end, -0.1);
        assert_eq!(run.monitor.records.last().unwrap().t, -0.1);
        assert_eq!(run.outcome, Outcome::Completed);
        let ts: Vec<f64> = run.monitor.records.iter().map(|r| r.t).collect();
        assert!(ts.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn backward_gaussian_is_monotone_and_dissipative() {
        let mut s = solver(256, 40.0);
        let grid = *s.ops().grid();
        let u = gaussian(&grid, 1.5);
        let cfg = SolverConfig {
            dt_max: 1e-3,
            monitor_cadence: 1,
            ..Default::default()
        };
        let run = s
            .integrate(&u, 0.0, -0.5, Direction::Backward, &cfg, |_, _| {})
            .unwrap();
        assert_eq!(run.monitor.monotonicity_violation(1e-8), None);
        let res = dissipation_residual(&run.monitor).unwrap();
        assert!(res < 1e-3, "{res}");
        let excess = gradient_law_excess(&run.monitor).unwrap();
        assert!(excess < 1e-4, "{excess}");
    }

    #[test]
    fn strang_splitting_is_second_order() {
        let grid = Grid::new(1, 40.0, 256).unwrap();
        let u = gaussian(&grid, 1.5);
        let params = ModelParams::new(1, 2.0).unwrap();
        let o = splitting_order(params, &u, 0.0, -0.2, Direction::Backward, 0.02).unwrap();
        assert!((o.order - 2.0).abs() < 0.2, "{o:?}");
        assert!(o.fine_gap < o.coarse_gap);
    }

    #[test]
    fn rounding_leaves_no_sliver_step() {
        let mut s = solver(64, 10.0);
        let grid = *s.ops().grid();
        let cfg = SolverConfig {
            dt_max: 1e-4,
            monitor_cadence: 1,
            ..Default::default()
        };
        let t_from = -1.0 / 16.0;
        let run = s
            .integrate(
                &gaussian(&grid, 0.5),
                t_from,
                t_from - 0.1,
                Direction::Backward,
                &cfg,
                |_, _| {},
            )
            .unwrap();
        assert_eq!(run.steps, 1000);
        assert_eq!(run.t_end, t_from - 0.1);
    }

    #[test]
    fn zero_data_has_zero_residual() {
        let mut s = solver(32, 10.0);
        let grid = *s.ops().grid();
        let cfg = SolverConfig {
            dt_max: 1e-2,
            monitor_cadence: 1,
            ..Default::default()
        };
        let run = s
            .integrate(
                &ComplexField::zeros(&grid),
                0.0,
                -0.1,
                Direction::Backward,
                &cfg,
                |_, _| {},
            )
            .unwrap();
        assert_eq!(dissipation_residual(&run.monitor).unwrap(), 0.0);
    }

    #[test]
    fn residual_requires_dense_records() {
        let mut m = StepMonitor::new(Direction::Backward, 5);
        assert_eq!(dissipation_residual(&m), Err(SolverError::CadenceNotOne(5)));
        m.cadence = Some(1);
        assert_eq!(
            dissipation_residual(&m),
            Err(SolverError::InsufficientSamples(0))
        );
    }

    #[test]
    fn forward_run_detects_blowup() {
        let mut s = solver(64, 20.0);
        let grid = *s.ops().grid();
        let u = ComplexField::inject(&grid, |_| Complex64::new(1.0, 0.0));
        let cfg = SolverConfig {
            dt_max: 1e-2,
            blowup_linf_threshold: 50.0,
            ..Default::default()
        };
        // A constant solves the ODE exactly and blows up at t = 1/α = 0.5.
        let run = s
            .integrate(&u, 0.0, 1.0, Direction::Forward, &cfg, |_, _| {})
            .unwrap();
        match run.outcome {
            Outcome::BlowupDetected { t, linf } => {
                assert!(linf > 50.0);
                assert!((t - (0.5 - 0.5 * linf.powi(-2))).abs() < 1e-10, "{t}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn monitor_csv_round_trip() {
        let mut s = solver(64, 20.0);
        let grid = *s.ops().grid();
        let cfg = SolverConfig {
            dt_max: 1e-2,
            monitor_cadence: 3,
            ..Default::default()
        };
        let run = s
            .integrate(
                &gaussian(&grid, 1.0),
                0.0,
                -0.2,
                Direction::Backward,
                &cfg,
                |_, _| {},
            )
            .unwrap();
        let text = run.monitor.to_csv();
        assert!(text.starts_with("t,l2,h1,linf,lp_alpha2,dissipation\n"));
        let back = StepMonitor::from_csv(&text).unwrap();
        assert_eq!(back.direction, Direction::Backward);
        assert_eq!(back.records.len(), run.monitor.records.len());
        for (a, b) in back.records.iter().zip(&run.monitor.records) {
            assert_eq!(
                (a.t, a.l2, a.h1, a.linf, a.lp_alpha2, a.dissipation),
                (b.t, b.l2, b.h1, b.linf, b.lp_alpha2, b.dissipation)
            );
        }
        assert_eq!(back.to_csv(), text);
        assert!(StepMonitor::from_csv("t,l2\n1,2").is_err());
        assert!(StepMonitor::from_csv(&format!(
            "{MONITOR_CSV_HEADER}\n0,1,2,1,1,1\n0,1,2,1,1,1\n"
        ))
        .is_err());
    }
}
