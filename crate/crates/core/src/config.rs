//! Run configuration: a TOML document with namespaced keys plus
//! `key=value` overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{default_side_length, FieldGenerator, PropertySuiteConfig};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linear::TimeStepPolicy;
use crate::picard::PicardConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Linear,
    Picard,
    SweepEpsilon,
    Properties,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Linear => "linear",
            Mode::Picard => "picard",
            Mode::SweepEpsilon => "sweep_epsilon",
            Mode::Properties => "properties",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Mode::Linear),
            "picard" => Ok(Mode::Picard),
            "sweep_epsilon" => Ok(Mode::SweepEpsilon),
            "properties" => Ok(Mode::Properties),
            other => Err(Error::Validation(format!(
                "unknown mode {other:?} (expected linear, picard, sweep_epsilon or properties)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    #[serde(default = "default_side_length")]
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_s")]
    pub s: f64,
    /// Defaults to `dim/2 + 1.6`.
    pub alpha: Option<f64>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    pub dt_max: Option<f64>,
    #[serde(default = "default_one")]
    pub sample_every: usize,
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default = "default_c_gronwall")]
    pub c_gronwall: f64,
    pub t0: Option<f64>,
    #[serde(default = "default_true")]
    pub mollify_initial: bool,
    #[serde(default = "default_min_steps")]
    pub min_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertiesSpec {
    #[serde(default = "default_fields")]
    pub fields: usize,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

fn default_s() -> f64 {
    0.75
}
fn default_safety() -> f64 {
    0.5
}
fn default_one() -> usize {
    1
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_outer() -> usize {
    30
}
fn default_c_gronwall() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_min_steps() -> usize {
    32
}
fn default_epsilons() -> Vec<f64> {
    vec![0.4, 0.2, 0.1]
}
fn default_fields() -> usize {
    100
}
fn default_pairs() -> usize {
    200
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            s: default_s(),
            alpha: None,
            epsilon: 0.0,
            safety: default_safety(),
            dt_max: None,
            sample_every: 1,
            t_end: None,
        }
    }
}

impl Default for PicardSpec {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_outer: default_max_outer(),
            c_gronwall: default_c_gronwall(),
            t0: None,
            mollify_initial: true,
            min_steps: default_min_steps(),
        }
    }
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { epsilons: default_epsilons() }
    }
}

impl Default for PropertiesSpec {
    fn default() -> Self {
        Self { fields: default_fields(), pairs: default_pairs(), seed: 0 }
    }
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: default_dir(), snapshot_times: Vec::new() }
    }
}

/// Fully resolved and validated description of one job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub mode: Mode,
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub picard: PicardSpec,
    pub initial: Option<FieldGenerator>,
    pub coefficient: Option<FieldGenerator>,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub properties: PropertiesSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

impl RunSpec {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.dim, self.grid.n, self.grid.length).map_err(|e| invalid(e.to_string()))
    }

    pub fn alpha(&self) -> f64 {
        self.solver.alpha.unwrap_or(self.grid.dim as f64 / 2.0 + 1.6)
    }

    pub fn policy(&self) -> TimeStepPolicy {
        TimeStepPolicy { safety: self.solver.safety, dt_max: self.solver.dt_max.unwrap_or(f64::INFINITY) }
    }

    pub fn picard_config(&self) -> PicardConfig {
        PicardConfig {
            s: self.solver.s,
            alpha: self.alpha(),
            epsilon_moll: self.solver.epsilon,
            c_gronwall: self.picard.c_gronwall,
            tol_picard: self.picard.tol,
            max_outer: self.picard.max_outer,
            t0_override: self.picard.t0,
            mollify_initial: self.picard.mollify_initial,
            safety: self.solver.safety,
            dt_max: self.solver.dt_max.unwrap_or(f64::INFINITY),
            min_steps: self.picard.min_steps,
            sample_every: self.solver.sample_every,
        }
    }

    pub fn suite_config(&self) -> PropertySuiteConfig {
        PropertySuiteConfig {
            dim: self.grid.dim,
            n: self.grid.n,
            length: self.grid.length,
            fields: self.properties.fields,
            pairs: self.properties.pairs,
            seed: self.properties.seed,
        }
    }

    /// Fills defaults that depend on other keys.
    fn resolve(&mut self) {
        if self.solver.alpha.is_none() {
            self.solver.alpha = Some(self.alpha());
        }
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        let s = self.solver.s;
        if !(0.5..1.0).contains(&s) {
            return Err(invalid(format!("s must lie in [1/2, 1), got {s}")));
        }
        let alpha = self.alpha();
        let dim = self.grid.dim;
        if self.mode == Mode::Picard {
            self.picard_config().validate(dim)?;
        } else if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha must be nonnegative, got {alpha}")));
        }
        self.policy().validate().map_err(|e| invalid(e.to_string()))?;
        if self.solver.sample_every == 0 {
            return Err(invalid("solver.sample_every must be at least 1"));
        }
        let mut epsilons = vec![self.solver.epsilon];
        if self.mode == Mode::SweepEpsilon {
            if self.sweep.epsilons.is_empty() {
                return Err(invalid("sweep.epsilons must not be empty"));
            }
            epsilons.extend(&self.sweep.epsilons);
            if self.sweep.epsilons.iter().any(|&e| e <= 0.0) {
                return Err(invalid("sweep.epsilons must be positive"));
            }
        }
        for e in epsilons {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(invalid(format!("epsilon must be >= 0, got {e}")));
            }
            if e > 0.0 && e < 2.0 * grid.spacing() {
                return Err(invalid(format!(
                    "epsilon {e} is below twice the grid spacing {}",
                    grid.spacing()
                )));
            }
            if e >= 0.5 * grid.side_length() {
                return Err(invalid(format!("epsilon {e} must be below half the side length")));
            }
        }
        let needs_initial = matches!(self.mode, Mode::Linear | Mode::Picard | Mode::SweepEpsilon);
        if needs_initial && self.initial.is_none() {
            return Err(invalid(format!("mode {} requires an [initial] section", self.mode.as_str())));
        }
        if matches!(self.mode, Mode::Linear | Mode::SweepEpsilon) {
            if self.coefficient.is_none() {
                return Err(invalid(format!("mode {} requires a [coefficient] section", self.mode.as_str())));
            }
            match self.solver.t_end {
                Some(t) if t > 0.0 && t.is_finite() => {}
                _ => return Err(invalid("solver.t_end must be a positive number")),
            }
        }
        for (name, gen) in [("initial", &self.initial), ("coefficient", &self.coefficient)] {
            if let Some(g) = gen {
                let field = g.generate(grid).map_err(|e| invalid(format!("{name}: {e}")))?;
                let must_be_nonnegative = name == "coefficient" || self.mode == Mode::Picard;
                if must_be_nonnegative && field.min() < -1e-12 {
                    return Err(invalid(format!("{name} field must be nonnegative, min = {:e}", field.min())));
                }
            }
        }
        if self.output.snapshot_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("output.snapshot_times must be nonnegative"));
        }
        if self.mode == Mode::Properties && (self.properties.fields == 0 || self.properties.pairs == 0) {
            return Err(invalid("properties.fields and properties.pairs must be positive"));
        }
        Ok(())
    }

    /// TOML echo of the resolved run configuration.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse { line: None, message: e.to_string() })
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn parse_error(text: &str, e: toml::de::Error) -> Error {
    Error::Parse { line: e.span().map(|s| line_of(text, s.start)), message: e.message().to_string() }
}

/// Parses `key=value`; the value is read as a TOML literal and falls back to
/// a bare string.
pub fn parse_override(item: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Parse { line: None, message: format!("override {item:?} is not key=value") })?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(|p| p.is_empty()) {
        return Err(Error::Parse { line: None, message: format!("bad override key {key:?}") });
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

fn apply_override(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| Error::Parse {
            line: None,
            message: format!("override {key}: {part} is not a section"),
        })?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunSpec> {
    parse_config_with(text, &[], None)
}

/// [`parse_config`] with `key=value` overrides and an optional mode that must
/// agree with the document's `mode` key when both are given.
pub fn parse_config_with(text: &str, overrides: &[String], mode: Option<Mode>) -> Result<RunSpec> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    for item in overrides {
        let (k, v) = parse_override(item)?;
        apply_override(&mut table, &k, v)?;
    }
    if let Some(m) = mode {
        match table.get("mode").and_then(|v| v.as_str()) {
            Some(doc) if doc != m.as_str() => {
                return Err(invalid(format!("config declares mode {doc:?} but {:?} was requested", m.as_str())));
            }
            _ => {
                table.insert("mode".into(), toml::Value::String(m.as_str().into()));
            }
        }
    }
    let rendered = toml::to_string(&table).map_err(|e| Error::Parse { line: None, message: e.to_string() })?;
    let mut spec: RunSpec = if overrides.is_empty() && mode.is_none() {
        toml::from_str(text).map_err(|e| parse_error(text, e))?
    } else {
        toml::from_str(&rendered).map_err(|e| Error::Parse { line: None, message: e.message().to_string() })?
    };
    spec.resolve();
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
mode = "picard"
grid.dim = 1
grid.n = 64
solver.s = 0.75
solver.alpha = 2.1
initial.kind = "gaussian_bump"
initial.width = 0.5
"#;

    #[test]
    fn minimal_picard_fills_defaults() {
        let spec = parse_config(MINIMAL).unwrap();
        assert_eq!(spec.mode, Mode::Picard);
        assert_eq!(spec.solver.safety, 0.5);
        assert_eq!(spec.picard.tol, 1e-8);
        assert_eq!(spec.picard.max_outer, 30);
        assert_eq!(spec.picard.c_gronwall, 1.0);
        assert_eq!(spec.grid.length, 2.0 * std::f64::consts::PI);
        let echo = parse_config(&spec.to_toml().unwrap()).unwrap();
        assert_eq!(echo, spec);
    }

    #[test]
    fn endpoint_s_rejected() {
        let err = parse_config_with(MINIMAL, &["solver.s=1.0".into()], None).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn alpha_floor_cites_dimension() {
        let text = MINIMAL.replace("grid.dim = 1", "grid.dim = 2").replace("grid.n = 64", "grid.n = 32");
        let err = parse_config_with(&text, &["solver.alpha=1.4".into()], None).unwrap_err();
        assert!(err.to_string().contains("alpha must exceed dim/2+1, got 1.4 for dim=2"), "{err}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = format!("{MINIMAL}solver.bogus = 3\n");
        match parse_config(&text).unwrap_err() {
            Error::Parse { line, message } => {
                assert!(message.contains("bogus"), "{message}");
                assert!(line.is_some());
            }
            other => panic!("{other:?}"),
        }
        let err = parse_config("grid.dim = [\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: Some(_), .. }));
    }

    #[test]
    fn overrides_and_mode_agreement() {
        let spec = parse_config_with(MINIMAL, &["output.dir=runs/a".into(), "picard.tol=1e-9".into()], Some(Mode::Picard))
            .unwrap();
        assert_eq!(spec.output.dir, PathBuf::from("runs/a"));
        assert_eq!(spec.picard.tol, 1e-9);
        assert!(parse_config_with(MINIMAL, &[], Some(Mode::Linear)).is_err());
        assert!(parse_override("novalue").is_err());
    }

    #[test]
    fn linear_requires_coefficient_and_horizon() {
        let text = MINIMAL.replace("picard", "linear");
        assert!(parse_config(&text).is_err());
        let full = format!("{text}solver.t_end = 0.1\ncoefficient.kind = \"constant\"\ncoefficient.amplitude = 1.0\n");
        assert_eq!(parse_config(&full).unwrap().mode, Mode::Linear);
    }
}
