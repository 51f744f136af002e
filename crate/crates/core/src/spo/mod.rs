//! Subharmonic periodic orbits: initialization of the Floquet frame at
//! `eps = 0`, the large-system-free quasi-Newton correction, continuation in
//! `eps`, and the final diagonalization.

mod continuation;
mod init;
mod newton;
mod seeds;

pub use continuation::{
    continuation_grid, continue_along, continue_family, diagonalize_floquet, order_center_pair, rescale_solution, ContinuationConfig, DiagonalFloquet,
};
pub use init::{
    area_check, init_center_bundle, init_hyperbolic_bundle, initialize, seed_unperturbed, CenterBundle,
    HyperbolicBundle, InitCenterWorkspace, InitConfig, Seed,
};
pub use newton::{
    compute_residual, evaluate, p_step, quasi_newton_solve, schur_normalize, x_step, CenterBlock,
    Evaluation, NewtonResidual, PStep, SolverConfig,
};
pub use seeds::{elliptic_k, estimate_period, pendulum_libration_momentum, tune_symmetric_orbit, SymmetricOrbit};

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use thiserror::Error;

use crate::map::MapError;
use crate::seqsolve::SeqSolveError;
use crate::systems::ResonanceLabel;
use crate::State;

pub type CMatrix = Matrix4<Complex64>;
pub type CVector = Vector4<Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpoError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Sequence(#[from] SeqSolveError),
    #[error("Floquet frame P({0}) is singular")]
    SingularFrame(usize),
    #[error("seed is not periodic: invariance residual {residual:e}, estimated Tp/T = {ratio}")]
    SeedMismatch { residual: f64, ratio: f64 },
    #[error("power iteration did not converge for the {which} direction even with doubled length")]
    PowerIteration { which: &'static str },
    #[error("power iteration needs the doubled sequence (negative multiplier)")]
    NeedsDoubling,
    #[error("center bundle coefficient B({k}) = {value} differs from 1")]
    Symplecticity { k: usize, value: f64 },
    #[error("quasi-Newton solve did not converge; residual history {history:?}")]
    NotConverged { history: Vec<[f64; 2]> },
    #[error("continuation stalled at eps = {reached}: {reason}")]
    Stalled { reached: f64, reason: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl SpoError {
    /// Whether the error reflects a solver that failed to converge rather than a numerical breakdown.
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Self::NotConverged { .. } | Self::Stalled { .. } | Self::PowerIteration { .. })
    }
}

/// How the center block is corrected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    /// Perturbed maps: all center multipliers are corrected.
    Perturbed,
    /// Time-`t` maps of autonomous flows: `lambda1 = lambda2 = 1` stay pinned.
    FlowMap,
}

/// Multipliers in the near-diagonal layout
/// `[[l1, T, 0, 0], [0, l2, 0, 0], [0, 0, ls(k), 0], [0, 0, 0, lu(k)]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NearDiagonalFloquet {
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub t: Complex64,
    pub lambda_s: Vec<f64>,
    pub lambda_u: Vec<f64>,
}

impl NearDiagonalFloquet {
    pub fn matrix(&self, k: usize) -> CMatrix {
        let mut m = CMatrix::zeros();
        m[(0, 0)] = self.lambda1;
        m[(0, 1)] = self.t;
        m[(1, 1)] = self.lambda2;
        m[(2, 2)] = Complex64::new(self.lambda_s[k], 0.0);
        m[(3, 3)] = Complex64::new(self.lambda_u[k], 0.0);
        m
    }

    pub fn center(&self) -> Matrix2<Complex64> {
        Matrix2::new(self.lambda1, self.t, Complex64::new(0.0, 0.0), self.lambda2)
    }

    pub fn is_constant(&self) -> bool {
        self.lambda_s.iter().all(|&l| l == self.lambda_s[0])
            && self.lambda_u.iter().all(|&l| l == self.lambda_u[0])
    }

    /// `prod lambda_s(k) * prod lambda_u(k)`; one for symplectic maps.
    pub fn normal_product(&self) -> f64 {
        self.lambda_s.iter().chain(&self.lambda_u).map(|l| l.ln()).sum::<f64>().exp()
    }

    /// Full determinant of the period product, `(l1 l2)^q prod ls prod lu`.
    pub fn determinant(&self) -> Complex64 {
        let q = self.lambda_s.len() as u32;
        (self.lambda1 * self.lambda2).powu(q) * self.normal_product()
    }

    pub fn stability(&self) -> Stability {
        Stability::classify(self.lambda1, self.lambda2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    /// Real pair off the unit circle.
    Hyperbolic,
    /// Complex-conjugate pair on the unit circle.
    Elliptic,
    /// Neither, e.g. the double unit multiplier of an unperturbed orbit.
    Degenerate,
}

impl Stability {
    pub fn classify(l1: Complex64, l2: Complex64) -> Self {
        let on_circle = (l1.norm() - 1.0).abs() < 1e-6 && (l2.norm() - 1.0).abs() < 1e-6;
        if l1.im.abs() > 1e-8 && on_circle {
            Self::Elliptic
        } else if l1.im.abs() <= 1e-8 && l2.im.abs() <= 1e-8 && (l1.norm() - 1.0).abs() > 1e-12 {
            Self::Hyperbolic
        } else {
            Self::Degenerate
        }
    }
}

/// An SPO `X(k)` with Floquet frame `P(k)` and multipliers, at one `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbitSolution {
    pub eps: f64,
    pub label: ResonanceLabel,
    pub x: Vec<State>,
    pub p: Vec<CMatrix>,
    pub lambda: NearDiagonalFloquet,
    pub mode: SolveMode,
    /// Tolerance the solution was converged to.
    pub tol: f64,
    /// `[|E|, |E_red|]` per quasi-Newton iteration of the last solve.
    pub history: Vec<[f64; 2]>,
}

impl PeriodicOrbitSolution {
    /// Orbit length; twice the label's `q` when a negative multiplier forced doubling.
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// `J = [[0, I], [-I, 0]]`.
pub fn symplectic_j() -> Matrix4<f64> {
    let mut j = Matrix4::zeros();
    j[(0, 2)] = 1.0;
    j[(1, 3)] = 1.0;
    j[(2, 0)] = -1.0;
    j[(3, 1)] = -1.0;
    j
}

/// Symplectic form `v1^T J v2`.
pub fn omega(v1: &State, v2: &State) -> f64 {
    v1.dot(&(symplectic_j() * v2))
}

pub(crate) fn to_complex(m: &Matrix4<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub(crate) fn sup_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
