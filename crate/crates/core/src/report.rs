//! Run reports: key-value summary, per-series CSV and an optional log-log SVG.
//!
//! Rendering depends only on the report value, with fixed float formatting
//! and insertion order, so identical reports give identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::ReportError;
use crate::experiments::{NormSeries, RateFit};

pub const REPORT_HEADER: &str = "# blowup-lab report";

/// Fixed float formatting used in every artifact: ten decimals for moderate
/// magnitudes, scientific otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if (1e-3..1e7).contains(&x.abs()) {
        format!("{x:.10}")
    } else {
        format!("{x:.10e}")
    }
}

/// A pass/fail verdict that carries the rule it was judged by.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// Human-readable rule, including the tolerance.
    pub rule: String,
    pub passed: bool,
}

impl Check {
    /// `|measured - target| <= tolerance + 2 stderr`.
    pub fn slope(name: &str, fit: &RateFit, target: f64, tolerance: f64) -> Self {
        let bound = tolerance + 2.0 * fit.stderr;
        Self {
            name: name.to_string(),
            measured: fit.slope,
            rule: format!(
                "|slope - ({})| <= {} + 2*stderr = {}",
                fmt_f64(target),
                fmt_f64(tolerance),
                fmt_f64(bound)
            ),
            passed: (fit.slope - target).abs() <= bound,
        }
    }

    pub fn within(name: &str, measured: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            measured,
            rule: format!("|value - ({})| <= {}", fmt_f64(target), fmt_f64(tolerance)),
            passed: (measured - target).abs() <= tolerance,
        }
    }

    pub fn below(name: &str, measured: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            measured,
            rule: format!("value < {}", fmt_f64(limit)),
            passed: measured < limit,
        }
    }

    pub fn above(name: &str, measured: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            measured,
            rule: format!("value > {}", fmt_f64(limit)),
            passed: measured > limit,
        }
    }

    /// A boolean property; `measured` is 1 when it holds.
    pub fn holds(name: &str, passed: bool, rule: &str) -> Self {
        Self {
            name: name.to_string(),
            measured: if passed { 1.0 } else { 0.0 },
            rule: rule.to_string(),
            passed,
        }
    }
}

/// A series written as CSV, plotted when it carries a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesOutput {
    pub series: NormSeries,
    pub fit: Option<RateFit>,
    /// Name of the abscissa column.
    pub x_label: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub title: String,
    /// Resolved configuration, one dotted key per entry.
    pub config: Vec<(String, String)>,
    pub results: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub series: Vec<SeriesOutput>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            ..Default::default()
        }
    }

    pub fn echo_config(&mut self, toml_text: &str) {
        if let Ok(table) = toml_text.parse::<toml::Table>() {
            flatten("", &table, &mut self.config);
        }
    }

    pub fn result(&mut self, key: impl Into<String>, value: impl ToString) {
        self.results.push((key.into(), value.to_string()));
    }

    pub fn number(&mut self, key: impl Into<String>, value: f64) {
        self.results.push((key.into(), fmt_f64(value)));
    }

    pub fn fit(&mut self, key: &str, fit: &RateFit) {
        self.number(format!("{key}.slope"), fit.slope);
        self.number(format!("{key}.stderr"), fit.stderr);
        self.number(format!("{key}.intercept"), fit.intercept);
        self.number(format!("{key}.window_lo"), fit.window.0);
        self.number(format!("{key}.window_hi"), fit.window.1);
        self.result(format!("{key}.points"), fit.points);
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn add_series(&mut self, series: NormSeries, fit: Option<RateFit>) {
        self.series.push(SeriesOutput {
            series,
            fit,
            x_label: "t".into(),
        });
    }

    pub fn add_series_against(&mut self, series: NormSeries, fit: Option<RateFit>, x_label: &str) {
        self.series.push(SeriesOutput {
            series,
            fit,
            x_label: x_label.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Key-value summary. A report with no content renders as the header line only.
    pub fn render_summary(&self) -> String {
        let mut out = String::new();
        out.push_str(REPORT_HEADER);
        if !self.title.is_empty() {
            let _ = write!(out, ": {}", self.title);
        }
        out.push('\n');
        let mut section = |name: &str, entries: &[(String, String)]| {
            if entries.is_empty() {
                return;
            }
            let _ = writeln!(out, "\n[{name}]");
            for (k, v) in entries {
                let _ = writeln!(out, "{k} = {v}");
            }
        };
        section("config", &self.config);
        section("results", &self.results);
        let checks: Vec<(String, String)> = self
            .checks
            .iter()
            .flat_map(|c| {
                [
                    (format!("{}.measured", c.name), fmt_f64(c.measured)),
                    (format!("{}.rule", c.name), c.rule.clone()),
                    (format!("{}.status", c.name), status(c.passed).to_string()),
                ]
            })
            .collect();
        section("checks", &checks);
        if !self.checks.is_empty() {
            let failed = self.checks.iter().filter(|c| !c.passed).count();
            section(
                "summary",
                &[
                    ("checks".into(), self.checks.len().to_string()),
                    ("failed".into(), failed.to_string()),
                    ("status".into(), status(failed == 0).into()),
                ],
            );
        }
        out
    }

    /// One CSV per series: `x_label,<series label>`, shortest round-trip floats.
    pub fn render_series_csv(series: &SeriesOutput) -> String {
        let mut out = format!("{},{}\n", series.x_label, series.series.label);
        for (x, y) in &series.series.samples {
            let _ = writeln!(out, "{x:e},{y:e}");
        }
        out
    }

    /// `log10(value)` against `log10(|x|)`, one polyline per fitted series.
    /// `None` when no series carries a fit.
    pub fn render_svg(&self) -> Option<String> {
        let fitted: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .filter(|s| s.fit.is_some())
            .map(|s| {
                s.series
                    .samples
                    .iter()
                    .filter(|(x, y)| *x != 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
                    .map(|(x, y)| (x.abs().log10(), y.log10()))
                    .collect()
            })
            .collect();
        if fitted.is_empty() {
            return None;
        }
        let mut x_labels = self
            .series
            .iter()
            .filter(|s| s.fit.is_some())
            .map(|s| s.x_label.as_str());
        let first = x_labels.next().unwrap_or("x");
        let x_label = if x_labels.all(|l| l == first) {
            first
        } else {
            "x"
        };
        let (w, h, pad) = (640.0, 480.0, 48.0);
        let all = fitted.iter().flatten();
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !(x1 > x0) {
            x1 = x0 + 1.0;
        }
        if !(y1 > y0) {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
        const COLORS: [&str; 6] = [
            "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
        ];
        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
        );
        let _ = writeln!(
            out,
            "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
            w - 2.0 * pad,
            h - 2.0 * pad
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">log10|{}| from {:.3} to {:.3}</text>",
            w / 2.0,
            h - 12.0,
            escape(x_label),
            x0,
            x1
        );
        let _ = writeln!(
            out,
            "<text x=\"12\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 12 {})\" text-anchor=\"middle\">log10 norm from {:.3} to {:.3}</text>",
            h / 2.0,
            h / 2.0,
            y0,
            y1
        );
        let labels = self
            .series
            .iter()
            .filter(|s| s.fit.is_some())
            .map(|s| &s.series.label);
        for (i, (pts, label)) in fitted.iter().zip(labels).enumerate() {
            let color = COLORS[i % COLORS.len()];
            let coords: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                coords.join(" ")
            );
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{}</text>",
                pad + 8.0,
                pad + 16.0 * (i as f64 + 1.0),
                escape(label)
            );
        }
        out.push_str("</svg>\n");
        Some(out)
    }

    /// Writes `summary.txt`, `series/<label>.csv` and, if requested and
    /// available, `plot.svg`. Returns the written paths in order.
    pub fn write(&self, dir: &Path, svg: bool) -> Result<Vec<PathBuf>, ReportError> {
        let mut written = Vec::new();
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ReportError { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let summary = dir.join("summary.txt");
        std::fs::write(&summary, self.render_summary()).map_err(io(&summary))?;
        written.push(summary);
        if !self.series.is_empty() {
            let series_dir = dir.join("series");
            std::fs::create_dir_all(&series_dir).map_err(io(&series_dir))?;
            for s in &self.series {
                let path = series_dir.join(format!("{}.csv", file_stem(&s.series.label)));
                std::fs::write(&path, Self::render_series_csv(s)).map_err(io(&path))?;
                written.push(path);
            }
        }
        if svg {
            if let Some(text) = self.render_svg() {
                let path = dir.join("plot.svg");
                std::fs::write(&path, text).map_err(io(&path))?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

fn status(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, String)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.to_string())),
        }
    }
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
