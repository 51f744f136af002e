//! Run configuration: one TOML file, optionally overridden from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrate::IntegratorConfig;
use crate::separatrix::{Branch, Scale};
use crate::spo::{ContinuationConfig, InitConfig, SolveMode};
use crate::systems::{ResonanceLabel, SystemModel};
use crate::State;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("TOML syntax: {0}")]
    Syntax(String),
    #[error("at `{path}`: {message}")]
    Field { path: String, message: String },
    #[error("override `{0}` must look like key.path=value")]
    Override(String),
}

/// Where the orbit starts at `eps = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeedSpec {
    /// An explicit phase-space point.
    Point { state: [f64; 4] },
    /// A time-reversal symmetric orbit `(x, 0, 0, p_y)`, tuned to the resonant period.
    Symmetric { x: f64, py: f64 },
    /// The pendulum libration through `(0, 0, 0, p_y)` with the resonant period.
    Libration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    Point,
    Symmetric,
    Libration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub kind: SeedKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub py: Option<f64>,
    /// Position along the unperturbed orbit as a fraction of its period.
    #[serde(default)]
    pub phase: f64,
    /// Perturbation phase of the stroboscopic section.
    #[serde(default)]
    pub theta0: f64,
}

impl SeedConfig {
    pub fn spec(&self) -> Result<SeedSpec, ConfigError> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| field(&format!("seed.{name}"), "missing for this seed kind"));
        Ok(match self.kind {
            SeedKind::Point => SeedSpec::Point { state: self.state.ok_or_else(|| field("seed.state", "missing for a point seed"))? },
            SeedKind::Symmetric => SeedSpec::Symmetric { x: need(self.x, "x")?, py: need(self.py, "py")? },
            SeedKind::Libration => SeedSpec::Libration,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinueSection {
    pub eps_f: f64,
    pub n_steps: usize,
}

/// `alpha = "auto"` or a number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSetting {
    Value(f64),
    Word(AutoWord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoWord {
    Auto,
}

impl AlphaSetting {
    pub fn scale(self) -> Scale {
        match self {
            Self::Value(a) => Scale::Fixed(a),
            Self::Word(AutoWord::Auto) => Scale::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparatrixSection {
    pub degree: usize,
    pub alpha: AlphaSetting,
    pub e_tol: f64,
    /// Grid points per bisection probe.
    pub samples: usize,
    /// Curve samples per orbit point.
    pub n_per_k: usize,
    pub branches: Vec<Branch>,
}

impl Default for SeparatrixSection {
    fn default() -> Self {
        Self {
            degree: 20,
            alpha: AlphaSetting::Word(AutoWord::Auto),
            e_tol: 1e-6,
            samples: 64,
            n_per_k: 200,
            branches: vec![Branch::WeakStable, Branch::WeakUnstable],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

fn default_mode() -> SolveMode {
    SolveMode::Perturbed
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemModel,
    pub resonance: ResonanceLabel,
    pub seed: SeedConfig,
    pub continuation: ContinueSection,
    #[serde(default = "default_mode")]
    pub mode: SolveMode,
    #[serde(default)]
    pub solver: ContinuationConfig,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub separatrix: SeparatrixSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn field(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { path: path.into(), message: message.into() }
}

impl RunConfig {
    /// Parses TOML text, applies `key.path=value` overrides, then validates.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut value: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let de = toml::Value::Table(value);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Field {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::parse(&text, overrides)
    }

    /// Checks that need more than one field or the library constructors.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.system.validate().map_err(|e| field("system", e.to_string()))?;
        ResonanceLabel::new(self.resonance.p, self.resonance.q).map_err(|e| field("resonance", e.to_string()))?;
        if self.system.perturbation_period().is_none() {
            return Err(field("system.kind", "the model has no perturbation period to strobe at"));
        }
        if !(self.continuation.eps_f >= 0.0 && self.continuation.eps_f.is_finite()) {
            return Err(field("continuation.eps_f", "must be finite and non-negative"));
        }
        if self.continuation.n_steps == 0 {
            return Err(field("continuation.n_steps", "must be positive"));
        }
        self.integrator.validate().map_err(|e| field("integrator", e.to_string()))?;
        if !(self.solver.solver.tol > 0.0) {
            return Err(field("solver.solver.tol", "must be positive"));
        }
        let s = &self.seed;
        if !(s.phase.is_finite() && s.theta0.is_finite()) {
            return Err(field("seed", "phase and theta0 must be finite"));
        }
        match s.spec()? {
            SeedSpec::Libration if !matches!(self.system, SystemModel::ForcedPendulum { .. }) => {
                return Err(field("seed.kind", "libration seeds need the forced pendulum"));
            }
            SeedSpec::Symmetric { .. } if matches!(self.system, SystemModel::ForcedPendulum { .. }) => {
                return Err(field("seed.kind", "symmetric seeds need a three-body model"));
            }
            SeedSpec::Point { state } if !state.iter().all(|v| v.is_finite()) => {
                return Err(field("seed.state", "must be finite"));
            }
            SeedSpec::Symmetric { x, py } if !(x.is_finite() && py.is_finite()) => {
                return Err(field("seed", "x and py must be finite"));
            }
            _ => {}
        }
        let sep = &self.separatrix;
        if sep.degree == 0 {
            return Err(field("separatrix.degree", "must be at least 1"));
        }
        if let AlphaSetting::Value(a) = sep.alpha {
            if !(a.is_finite() && a != 0.0) {
                return Err(field("separatrix.alpha", "must be finite and nonzero"));
            }
        }
        if !(sep.e_tol > 0.0) {
            return Err(field("separatrix.e_tol", "must be positive"));
        }
        if sep.samples == 0 || sep.n_per_k == 0 {
            return Err(field("separatrix", "samples and n_per_k must be positive"));
        }
        Ok(())
    }

    pub fn label(&self) -> ResonanceLabel {
        self.resonance
    }

    /// Perturbation period of the model; present after validation.
    pub fn map_period(&self) -> f64 {
        self.system.perturbation_period().unwrap_or(f64::NAN)
    }

    /// Period of the resonant unperturbed orbit, `q/p` map periods.
    pub fn orbit_period(&self) -> f64 {
        self.resonance.q as f64 / self.resonance.p as f64 * self.map_period()
    }

    pub fn seed_state(&self) -> Option<State> {
        match self.seed.spec() {
            Ok(SeedSpec::Point { state }) => Some(State::from(state)),
            _ => None,
        }
    }
}

fn apply_override(table: &mut toml::Table, o: &str) -> Result<(), ConfigError> {
    let (key, raw) = o.split_once('=').ok_or_else(|| ConfigError::Override(o.into()))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(o.into()));
    }
    // Parse the value as a TOML literal; bare words become strings.
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().into()));
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| field(key, format!("`{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
