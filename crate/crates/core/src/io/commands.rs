//! The four pipeline commands behind the CLI: seed, continue, separatrix, validate.

use std::path::{Path, PathBuf};

use thiserror::Error;

use super::config::{ConfigError, RunConfig, SeedSpec};
use super::files::{write_curves, write_json, FileError, SeparatrixFile, SolutionFile};
use super::validate::{validate_solution, ValidationReport};
use crate::integrate::{flow, IntegrationError, StroboscopicMap};
use crate::map::MapError;
use crate::separatrix::{fundamental_domain, parameterize, sample_curves, SeparatrixError};
use crate::spo::{
    continuation_grid, continue_along, initialize, pendulum_libration_momentum, tune_symmetric_orbit,
    PeriodicOrbitSolution, SpoError,
};
use crate::State;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    File(#[from] FileError),
    #[error(transparent)]
    Orbit(#[from] SpoError),
    #[error(transparent)]
    Separatrix(#[from] SeparatrixError),
    #[error("validation failed:\n{0}")]
    Validation(Box<ValidationReport>),
}

impl From<MapError> for CommandError {
    fn from(e: MapError) -> Self {
        Self::Orbit(e.into())
    }
}

impl From<IntegrationError> for CommandError {
    fn from(e: IntegrationError) -> Self {
        Self::Orbit(MapError::from(e).into())
    }
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

impl CommandError {
    /// Process exit code: 2 for configuration and input problems, 3 when a
    /// solver did not converge, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::File(_) => EXIT_CONFIG,
            Self::Orbit(SpoError::Precondition(_)) => EXIT_CONFIG,
            Self::Orbit(e) if e.is_non_convergence() => EXIT_NON_CONVERGENCE,
            Self::Separatrix(SeparatrixError::Precondition(_)) => EXIT_CONFIG,
            Self::Separatrix(SeparatrixError::Orbit(e)) if e.is_non_convergence() => EXIT_NON_CONVERGENCE,
            Self::Orbit(_) | Self::Separatrix(_) | Self::Validation(_) => EXIT_NUMERICAL,
        }
    }
}

pub fn build_map(cfg: &RunConfig, eps: f64) -> Result<StroboscopicMap, CommandError> {
    StroboscopicMap::new(cfg.system, eps, cfg.seed.theta0, cfg.integrator)
        .map_err(|e| ConfigError::Field { path: "integrator".into(), message: e.to_string() }.into())
}

/// Seed point on the unperturbed orbit, before the phase shift.
fn base_point(cfg: &RunConfig) -> Result<State, CommandError> {
    let t = cfg.orbit_period();
    Ok(match cfg.seed.spec()? {
        SeedSpec::Point { state } => State::from(state),
        SeedSpec::Symmetric { x, py } => tune_symmetric_orbit(&cfg.system, x, py, 0.5 * t, &cfg.integrator)?.x0,
        SeedSpec::Libration => State::new(0.0, 0.0, 0.0, pendulum_libration_momentum(t)?),
    })
}

pub fn seed_path(dir: &Path) -> PathBuf {
    dir.join("seed.json")
}

pub fn step_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("step_{step:04}.json"))
}

/// Builds the `eps = 0` solution and writes it to `seed.json` in the output directory.
pub fn cmd_seed(cfg: &RunConfig) -> Result<(PeriodicOrbitSolution, PathBuf), CommandError> {
    let x = base_point(cfg)?;
    let x0 = if cfg.seed.phase == 0.0 {
        x
    } else {
        flow(&cfg.system, 0.0, &x, 0.0, cfg.seed.phase * cfg.orbit_period(), &cfg.integrator)?
    };
    let map = build_map(cfg, 0.0)?;
    let sol = initialize(&map, &x0, cfg.label(), cfg.mode, &cfg.init)?;
    let path = seed_path(&cfg.output.dir);
    write_json(&path, &SolutionFile::new(cfg, 0, sol.eps, &sol))?;
    Ok((sol, path))
}

/// Continues the solution in `from` along the configured grid, writing one
/// file per step. A file from an earlier step of the same grid resumes it.
pub fn cmd_continue(cfg: &RunConfig, from: &Path) -> Result<Vec<(PeriodicOrbitSolution, PathBuf)>, CommandError> {
    let (file, sol) = SolutionFile::read(from)?;
    let n = cfg.continuation.n_steps;
    if file.step > 0 && (file.config.continuation != cfg.continuation || file.n_steps != n) {
        return Err(ConfigError::Field {
            path: "continuation".into(),
            message: format!("{} was written on a different continuation grid", from.display()),
        }
        .into());
    }
    if file.step > n {
        return Err(ConfigError::Field { path: "continuation.n_steps".into(), message: "resume step lies past the grid".into() }.into());
    }
    let eps_start = file.eps_start.0;
    let map = build_map(cfg, sol.eps)?;
    let mut cur = sol;
    let mut out = Vec::new();
    for i in file.step + 1..=n {
        let target = continuation_grid(eps_start, cfg.continuation.eps_f, n, i);
        cur = continue_along(&map, &cur, &[target], &cfg.solver)?.remove(0);
        let path = step_path(&cfg.output.dir, i);
        write_json(&path, &SolutionFile::new(cfg, i, eps_start, &cur))?;
        out.push((cur.clone(), path));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparatrixOutput {
    pub json: PathBuf,
    pub csv: PathBuf,
    pub rows: usize,
    pub min_radius: f64,
}

/// Parameterizes each configured branch, estimates its fundamental domain and
/// writes the coefficients plus one curve CSV per branch.
pub fn cmd_separatrix(cfg: &RunConfig, from: &Path) -> Result<Vec<SeparatrixOutput>, CommandError> {
    let (_, sol) = SolutionFile::read(from)?;
    let map = build_map(cfg, sol.eps)?;
    let sep = &cfg.separatrix;
    let mut out = Vec::new();
    for &branch in &sep.branches {
        let mut wp = parameterize(&map, &sol, branch, sep.degree, sep.alpha.scale())?;
        let dom = fundamental_domain(&map, &wp, sep.e_tol, sep.samples)?;
        let pts = sample_curves(&wp, &dom.radii, sep.n_per_k);
        let min_radius = dom.min;
        wp.domain = Some(dom);
        let json = cfg.output.dir.join(format!("separatrix_{}.json", branch.name()));
        let csv = cfg.output.dir.join(format!("separatrix_{}.csv", branch.name()));
        write_json(&json, &SeparatrixFile::new(cfg, &wp))?;
        write_curves(&csv, &pts)?;
        out.push(SeparatrixOutput { json, csv, rows: pts.len(), min_radius });
    }
    Ok(out)
}

/// Re-checks a solution file against the run configuration embedded in it.
pub fn cmd_validate(from: &Path) -> Result<ValidationReport, CommandError> {
    let (file, sol) = SolutionFile::read(from)?;
    file.config.validate()?;
    let map = build_map(&file.config, sol.eps)?;
    let report = validate_solution(&map, &sol)?;
    if report.ok() {
        Ok(report)
    } else {
        Err(CommandError::Validation(Box::new(report)))
    }
}
