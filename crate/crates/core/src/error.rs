use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("alpha = {0} is not admissible: alpha >= 2 is required")]
    AlphaTooSmall(f64),
    #[error("dimension N = {0} is not admissible: 1 <= N <= 4 is required")]
    Dimension(usize),
    #[error("(N-2)*alpha <= 4 violated for N = {dimension}, alpha = {alpha}")]
    Supercritical { dimension: usize, alpha: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    /// A structural condition on the profile data failed; `condition` names it.
    #[error("profile hypothesis violated: {condition} ({detail})")]
    Hypothesis { condition: String, detail: String },
    #[error("profile time must be negative, got t = {0}")]
    NonNegativeTime(f64),
    #[error("point has {got} coordinates, expected {expected}")]
    PointDimension { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("value array has {got} entries, grid needs {expected}")]
    Length { expected: usize, got: usize },
    #[error("L^p norm requires p >= 1, got p = {0}")]
    InvalidExponent(f64),
    #[error("region mask selects no grid points")]
    EmptyMask,
    #[error("non-finite value at grid index {0}")]
    NonFinite(usize),
    #[error("snapshot line {line}: {message}")]
    Snapshot { line: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid time span: {0}")]
    InvalidSpan(String),
    /// The pointwise ODE would blow up inside the requested forward substep.
    #[error("forward nonlinear step of size {dt} exceeds the pointwise blow-up horizon {horizon}")]
    ForwardStepBlowup { dt: f64, horizon: f64 },
    #[error("time step {dt} fell below dt_min = {dt_min} at t = {t}")]
    StepUnderflow { t: f64, dt: f64, dt_min: f64 },
    #[error("need at least 3 monitor records, got {0}")]
    InsufficientSamples(usize),
    #[error("dissipation checks require monitor cadence 1, got {0}")]
    CadenceNotOne(usize),
    #[error("monitor line {line}: {message}")]
    MonitorCsv { line: usize, message: String },
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),
    #[error("insufficient resolution: {0}")]
    ResolutionInsufficient(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("region mask selects no grid points")]
    EmptyMask,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config{}: {message}", at_line(*.line))]
    Parse {
        line: Option<usize>,
        message: String,
    },
    #[error("config key `{key}`{}: {message}", at_line(*.line))]
    Invalid {
        key: String,
        line: Option<usize>,
        message: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn at_line(line: Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

#[derive(Debug, Error)]
#[error("cannot write {path}: {source}")]
pub struct ReportError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}
