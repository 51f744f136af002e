//! JSON files for solutions and separatrices, and the CSV curve export.
//!
//! Every real is a hex-float string, complex numbers are `[re, im]` pairs and
//! per-point arrays run over `k = 0..q-1`.

use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::RunConfig;
use super::hexfloat::Hf;
use crate::separatrix::{Branch, CurvePoint, FundamentalDomain, SeparatrixParameterization};
use crate::spo::{CMatrix, NearDiagonalFloquet, PeriodicOrbitSolution, SolveMode};
use crate::systems::ResonanceLabel;
use crate::State;

pub const SOLUTION_FORMAT: &str = "spo-solution/1";
pub const SEPARATRIX_FORMAT: &str = "spo-separatrix/1";

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: at `{field}`: {message}")]
    Parse { path: String, field: String, message: String },
    #[error("{path}: {message}")]
    Content { path: String, message: String },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
}

type C = [Hf; 2];

fn c(z: Complex64) -> C {
    [Hf(z.re), Hf(z.im)]
}

fn uc(z: C) -> Complex64 {
    Complex64::new(z[0].0, z[1].0)
}

fn state(v: &State) -> [Hf; 4] {
    std::array::from_fn(|i| Hf(v[i]))
}

fn unstate(v: &[Hf; 4]) -> State {
    State::from_fn(|i, _| v[i].0)
}

fn hvec(v: &[f64]) -> Vec<Hf> {
    v.iter().copied().map(Hf).collect()
}

fn unhvec(v: &[Hf]) -> Vec<f64> {
    v.iter().map(|h| h.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionRecord {
    pub eps: Hf,
    pub label: ResonanceLabel,
    pub mode: SolveMode,
    pub tol: Hf,
    pub x: Vec<[Hf; 4]>,
    /// Frames `P(k)`, row-major.
    pub p: Vec<[[C; 4]; 4]>,
    pub lambda1: C,
    pub lambda2: C,
    pub t: C,
    pub lambda_s: Vec<Hf>,
    pub lambda_u: Vec<Hf>,
    pub history: Vec<[Hf; 2]>,
}

impl From<&PeriodicOrbitSolution> for SolutionRecord {
    fn from(s: &PeriodicOrbitSolution) -> Self {
        Self {
            eps: Hf(s.eps),
            label: s.label,
            mode: s.mode,
            tol: Hf(s.tol),
            x: s.x.iter().map(state).collect(),
            p: s.p.iter().map(|m| std::array::from_fn(|i| std::array::from_fn(|j| c(m[(i, j)])))).collect(),
            lambda1: c(s.lambda.lambda1),
            lambda2: c(s.lambda.lambda2),
            t: c(s.lambda.t),
            lambda_s: hvec(&s.lambda.lambda_s),
            lambda_u: hvec(&s.lambda.lambda_u),
            history: s.history.iter().map(|h| [Hf(h[0]), Hf(h[1])]).collect(),
        }
    }
}

impl SolutionRecord {
    pub fn to_solution(&self) -> Result<PeriodicOrbitSolution, String> {
        let n = self.x.len();
        if n == 0 {
            return Err("empty orbit".into());
        }
        if self.p.len() != n || self.lambda_s.len() != n || self.lambda_u.len() != n {
            return Err(format!("x has {n} points but p, lambda_s, lambda_u have {}, {}, {}",
                self.p.len(), self.lambda_s.len(), self.lambda_u.len()));
        }
        ResonanceLabel::new(self.label.p, self.label.q).map_err(|e| e.to_string())?;
        Ok(PeriodicOrbitSolution {
            eps: self.eps.0,
            label: self.label,
            x: self.x.iter().map(unstate).collect(),
            p: self.p.iter().map(|m| CMatrix::from_fn(|i, j| uc(m[i][j]))).collect(),
            lambda: NearDiagonalFloquet {
                lambda1: uc(self.lambda1),
                lambda2: uc(self.lambda2),
                t: uc(self.t),
                lambda_s: unhvec(&self.lambda_s),
                lambda_u: unhvec(&self.lambda_u),
            },
            mode: self.mode,
            tol: self.tol.0,
            history: self.history.iter().map(|h| [h[0].0, h[1].0]).collect(),
        })
    }
}

/// A solution together with the run that produced it and its place on the
/// continuation grid `eps_start + (eps_f - eps_start) step / n_steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub format: String,
    pub version: String,
    pub config: RunConfig,
    pub step: usize,
    pub n_steps: usize,
    pub eps_start: Hf,
    pub solution: SolutionRecord,
}

impl SolutionFile {
    pub fn new(config: &RunConfig, step: usize, eps_start: f64, sol: &PeriodicOrbitSolution) -> Self {
        Self {
            format: SOLUTION_FORMAT.into(),
            version: crate::VERSION.into(),
            config: config.clone(),
            step,
            n_steps: config.continuation.n_steps,
            eps_start: Hf(eps_start),
            solution: sol.into(),
        }
    }

    pub fn read(path: &Path) -> Result<(Self, PeriodicOrbitSolution), FileError> {
        let f: Self = read_json(path)?;
        if f.format != SOLUTION_FORMAT {
            return Err(content(path, format!("format {:?} is not {SOLUTION_FORMAT:?}", f.format)));
        }
        let sol = f.solution.to_solution().map_err(|m| content(path, m))?;
        Ok((f, sol))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainRecord {
    pub radii: Vec<Hf>,
    pub min: Hf,
    pub e_tol: Hf,
    pub norm: String,
    pub samples_per_probe: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparatrixFile {
    pub format: String,
    pub version: String,
    pub config: RunConfig,
    pub label: ResonanceLabel,
    pub branch: Branch,
    pub eps: Hf,
    pub lambda: Hf,
    pub alpha: Hf,
    /// `w[k][d]` is the degree-`d` coefficient at orbit point `k`.
    pub w: Vec<Vec<[Hf; 4]>>,
    pub domain: Option<DomainRecord>,
}

impl SeparatrixFile {
    pub fn new(config: &RunConfig, wp: &SeparatrixParameterization) -> Self {
        Self {
            format: SEPARATRIX_FORMAT.into(),
            version: crate::VERSION.into(),
            config: config.clone(),
            label: wp.label,
            branch: wp.branch,
            eps: Hf(wp.eps),
            lambda: Hf(wp.lambda),
            alpha: Hf(wp.alpha),
            w: wp.w.iter().map(|wk| wk.iter().map(state).collect()).collect(),
            domain: wp.domain.as_ref().map(|d| DomainRecord {
                radii: hvec(&d.radii),
                min: Hf(d.min),
                e_tol: Hf(d.e_tol),
                norm: d.norm.clone(),
                samples_per_probe: d.samples_per_probe,
            }),
        }
    }

    pub fn to_parameterization(&self) -> SeparatrixParameterization {
        SeparatrixParameterization {
            label: self.label,
            branch: self.branch,
            eps: self.eps.0,
            lambda: self.lambda.0,
            w: self.w.iter().map(|wk| wk.iter().map(unstate).collect()).collect(),
            alpha: self.alpha.0,
            domain: self.domain.as_ref().map(|d| FundamentalDomain {
                radii: unhvec(&d.radii),
                min: d.min.0,
                e_tol: d.e_tol.0,
                norm: d.norm.clone(),
                samples_per_probe: d.samples_per_probe,
            }),
        }
    }
}

fn content(path: &Path, message: impl Into<String>) -> FileError {
    FileError::Content { path: path.display().to_string(), message: message.into() }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FileError> {
    let io = |source| FileError::Io { path: path.display().to_string(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let text = serde_json::to_string_pretty(value).expect("file records always serialize");
    std::fs::write(path, text + "\n").map_err(io)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FileError> {
    let text = std::fs::read_to_string(path).map_err(|source| FileError::Io { path: path.display().to_string(), source })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| FileError::Parse {
        path: path.display().to_string(),
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Header of the curve CSV files.
pub const CURVE_HEADER: [&str; 6] = ["k", "s", "x", "y", "px", "py"];

/// Writes sampled points, shortest round-trip decimals.
pub fn write_curves(path: &Path, points: &[CurvePoint]) -> Result<(), FileError> {
    let err = |source| FileError::Csv { path: path.display().to_string(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| FileError::Io { path: path.display().to_string(), source })?;
    }
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(CURVE_HEADER).map_err(err)?;
    for p in points {
        let row = [p.k.to_string(), p.s.to_string(), p.x[0].to_string(), p.x[1].to_string(), p.x[2].to_string(), p.x[3].to_string()];
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|source| FileError::Io { path: path.display().to_string(), source })
}

pub fn read_curves(path: &Path) -> Result<Vec<CurvePoint>, FileError> {
    let err = |source| FileError::Csv { path: path.display().to_string(), source };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    let header = r.headers().map_err(err)?.clone();
    if header.iter().ne(CURVE_HEADER) {
        return Err(content(path, format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(err)?;
        let num = |i: usize| -> Result<f64, FileError> {
            rec[i].parse().map_err(|_| content(path, format!("bad number {:?}", &rec[i])))
        };
        let k = rec[0].parse().map_err(|_| content(path, format!("bad index {:?}", &rec[0])))?;
        out.push(CurvePoint { k, s: num(1)?, x: State::new(num(2)?, num(3)?, num(4)?, num(5)?) });
    }
    Ok(out)
}
