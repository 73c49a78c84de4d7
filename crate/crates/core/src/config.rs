//! Run configuration: flat TOML sections with a default for every key.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::experiments::{SequenceOptions, SequenceSchedule};
use crate::field::Grid;
use crate::model::ModelParams;
use crate::profile::{is_shape_condition, ProfileForm, ProfileSpec};
use crate::solver::{Direction, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed for the pointwise and field property corpora.
    pub seed: u64,
    pub model: ModelSection,
    pub profile: ProfileSection,
    pub grid: GridSection,
    pub solver: SolverConfig,
    pub experiment: ExperimentSection,
    pub simulate: SimulateSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_917,
            model: ModelSection::default(),
            profile: ProfileSection::default(),
            grid: GridSection::default(),
            solver: SolverConfig::default(),
            experiment: ExperimentSection::default(),
            simulate: SimulateSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub dimension: usize,
    pub alpha: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            dimension: 1,
            alpha: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    PowerLaw,
    MultiPoint,
}

/// Keys not used by `kind` must be absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub kind: ProfileKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Defaults to half the smallest point separation (1 for one point).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self {
            kind: ProfileKind::PowerLaw,
            amplitude: Some(1.0),
            k: Some(12.0),
            points: None,
            exponents: None,
            scale: None,
            rho: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Box edge length `L`.
    pub length: f64,
    /// Points per axis `M`.
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            length: 40.0,
            points: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Sequence indices `n`, with `T_n = -1/n`.
    pub ns: Vec<u32>,
    pub t0: f64,
    /// Range of `T_n - t` for the `μ` fit.
    pub mu_window: [f64; 2],
    pub samples_per_decade: usize,
    /// Range of `t` for the profile rate fits.
    pub rate_window: [f64; 2],
    /// Log-spaced sample times across `rate_window`.
    pub rate_samples: usize,
    pub hypothesis_tolerance: f64,
    /// Radius of the balls removed around each blow-up point.
    pub exterior_radius: f64,
    pub exterior_times: Vec<f64>,
    /// Compare `approx-seq` against a rerun on a grid with `2M` points per axis.
    pub grid_doubling: bool,
    /// Run forward tracking from the last sequence member.
    pub forward: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        let schedule = SequenceSchedule::default();
        let seq = SequenceOptions::default();
        Self {
            ns: schedule.ns,
            t0: schedule.t0,
            mu_window: [seq.mu_window.0, seq.mu_window.1],
            samples_per_decade: seq.samples_per_decade,
            rate_window: [-1e-1, -1e-4],
            rate_samples: 31,
            hypothesis_tolerance: 1e-2,
            exterior_radius: 0.3,
            exterior_times: vec![-1e-1, -1e-2, -1e-3],
            grid_doubling: true,
            forward: true,
        }
    }
}

impl ExperimentSection {
    pub fn schedule(&self) -> SequenceSchedule {
        SequenceSchedule {
            ns: self.ns.clone(),
            t0: self.t0,
        }
    }

    pub fn sequence_options(&self) -> SequenceOptions {
        SequenceOptions {
            mu_window: (self.mu_window[0], self.mu_window[1]),
            samples_per_decade: self.samples_per_decade,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialData {
    /// `amplitude · exp(-|x|² / (2 width²))`.
    Gaussian,
    /// `U(t_from)`.
    Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub direction: Direction,
    pub initial: InitialData,
    pub amplitude: f64,
    pub width: f64,
    pub t_from: f64,
    pub t_to: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            direction: Direction::Backward,
            initial: InitialData::Gaussian,
            amplitude: 1.5,
            width: 1.0,
            t_from: 0.0,
            t_to: -0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Used when neither `--out` nor the environment sets a directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    pub svg: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            svg: true,
        }
    }
}

/// Parsed config plus the source text, kept to point validation errors at lines.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    source: String,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            match (line, e.span().and_then(|s| key_at(text, s.start))) {
                (line, Some(key)) if !e.message().contains("unknown field") => {
                    ConfigError::Invalid {
                        key,
                        line,
                        message: e.message().trim().to_string(),
                    }
                }
                (line, _) => ConfigError::Parse {
                    line,
                    message: e.message().trim().to_string(),
                },
            }
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn model_params(&self) -> Result<ModelParams, ConfigError> {
        ModelParams::new(self.model.dimension, self.model.alpha)
            .map_err(|e| invalid("model.alpha", e))
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        Grid::new(self.model.dimension, self.grid.length, self.grid.points)
            .map_err(|e| invalid("grid.points", e))
    }

    pub fn profile_spec(&self) -> Result<ProfileSpec, ConfigError> {
        let params = self.model_params()?;
        let p = &self.profile;
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| invalid(&format!("profile.{key}"), "required for this kind"))
        };
        let reject = |present: bool, key: &str| {
            if present {
                Err(invalid(&format!("profile.{key}"), "not used by this kind"))
            } else {
                Ok(())
            }
        };
        let form = match p.kind {
            ProfileKind::PowerLaw => {
                reject(p.points.is_some(), "points")?;
                reject(p.exponents.is_some(), "exponents")?;
                reject(p.scale.is_some(), "scale")?;
                ProfileForm::PowerLaw {
                    amplitude: need(p.amplitude, "amplitude")?,
                    k: need(p.k, "k")?,
                }
            }
            ProfileKind::MultiPoint => {
                reject(p.amplitude.is_some(), "amplitude")?;
                reject(p.k.is_some(), "k")?;
                ProfileForm::MultiPoint {
                    points: p
                        .points
                        .clone()
                        .ok_or_else(|| invalid("profile.points", "required for this kind"))?,
                    exponents: p
                        .exponents
                        .clone()
                        .ok_or_else(|| invalid("profile.exponents", "required for this kind"))?,
                    scale: need(p.scale, "scale")?,
                }
            }
        };
        let rho = p.rho.unwrap_or_else(|| ProfileSpec::default_rho(&form));
        let spec = ProfileSpec { params, form, rho };
        if let Some(bad) = spec
            .structural_checks()
            .into_iter()
            .find(|c| !c.passed && is_shape_condition(&c.name))
        {
            return Err(invalid(
                shape_key(&bad.name),
                format!("{}: {}", bad.name, bad.detail),
            ));
        }
        Ok(spec)
    }

    /// Checks every cross-section constraint that does not need a run.
    /// Profile hypotheses are left to `profile-check` and the `--force` gate.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model_params()?;
        self.grid()?;
        self.profile_spec()?;
        self.solver.validate().map_err(|e| invalid("solver", e))?;
        let e = &self.experiment;
        e.schedule()
            .validate()
            .map_err(|err| invalid("experiment.ns", err))?;
        if !(e.mu_window[0] > 0.0 && e.mu_window[1] > e.mu_window[0]) {
            return Err(invalid("experiment.mu_window", "need 0 < lo < hi"));
        }
        if !(e.rate_window[0] < e.rate_window[1] && e.rate_window[1] < 0.0) {
            return Err(invalid("experiment.rate_window", "need lo < hi < 0"));
        }
        if e.rate_samples < 5 {
            return Err(invalid("experiment.rate_samples", "need at least 5"));
        }
        if e.samples_per_decade == 0 {
            return Err(invalid("experiment.samples_per_decade", "must be positive"));
        }
        if !(e.hypothesis_tolerance > 0.0) {
            return Err(invalid(
                "experiment.hypothesis_tolerance",
                "must be positive",
            ));
        }
        if !(e.exterior_radius > 0.0) {
            return Err(invalid("experiment.exterior_radius", "must be positive"));
        }
        if e.exterior_times.len() < 2 || !e.exterior_times.iter().all(|t| *t < 0.0) {
            return Err(invalid(
                "experiment.exterior_times",
                "need at least two negative times",
            ));
        }
        let s = &self.simulate;
        if s.t_from == s.t_to || s.direction.sign() * (s.t_to - s.t_from) <= 0.0 {
            return Err(invalid(
                "simulate.t_to",
                format!(
                    "{} run cannot go from {} to {}",
                    s.direction, s.t_from, s.t_to
                ),
            ));
        }
        if s.initial == InitialData::Profile && !(s.t_from < 0.0) {
            return Err(invalid("simulate.t_from", "profile data needs t_from < 0"));
        }
        if s.initial == InitialData::Gaussian && !(s.width > 0.0) {
            return Err(invalid("simulate.width", "must be positive"));
        }
        Ok(())
    }
}

impl LoadedConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config = RunConfig::from_toml(text)?;
        let loaded = Self {
            config,
            source: text.to_string(),
        };
        loaded.config.validate().map_err(|e| loaded.locate(e))?;
        Ok(loaded)
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Attaches the source line of the offending key, when it is present.
    pub fn locate(&self, err: ConfigError) -> ConfigError {
        match err {
            ConfigError::Invalid {
                key,
                line: None,
                message,
            } => ConfigError::Invalid {
                line: find_key(&self.source, &key),
                key,
                message,
            },
            other => other,
        }
    }
}

fn invalid(key: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        line: None,
        message: message.to_string(),
    }
}

fn shape_key(name: &str) -> &'static str {
    match name {
        "A > 0" => "profile.amplitude",
        "c > 0" => "profile.scale",
        "points lie in R^N" | "J >= 1" => "profile.points",
        _ => "profile.exponents",
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Dotted key of the assignment on the line containing `offset`.
fn key_at(text: &str, offset: usize) -> Option<String> {
    let line_no = line_of(text, offset);
    let mut section = String::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(name) = trimmed.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            section = name.trim().to_string();
        }
        if i + 1 == line_no {
            let (key, _) = trimmed.split_once('=')?;
            let key = key.trim();
            return Some(if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            });
        }
    }
    None
}

/// Line of `section.key` (or the `[section]` header for a bare section).
fn find_key(text: &str, dotted: &str) -> Option<usize> {
    let (section, key) = match dotted.split_once('.') {
        Some((s, k)) => (s, Some(k)),
        None => (dotted, None),
    };
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(name) = trimmed.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            if key.is_none() && current == section {
                return Some(i + 1);
            }
            continue;
        }
        if let (Some(key), Some((lhs, _))) = (key, trimmed.split_once('=')) {
            if current == section && lhs.trim() == key {
                return Some(i + 1);
            }
        }
    }
    None
}
