//! Continuation in `eps` and the final diagonalization of the multipliers.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::newton::{quasi_newton_solve, SolverConfig};
use super::{CMatrix, PeriodicOrbitSolution, SpoError, Stability};
use crate::map::SymplecticMap;
use crate::seqsolve::constant_scales;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    pub solver: SolverConfig,
    /// Step halvings allowed per nominal step before giving up.
    pub max_halvings: u32,
    /// Keep a hyperbolic center pair ordered as `|lambda1| < 1 < |lambda2|`.
    pub order_center: bool,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self { solver: SolverConfig::default(), max_halvings: 4, order_center: true }
    }
}

/// Makes `lambda_s`, `lambda_u` constant by scaling the last two frame columns.
/// The orbit points are untouched.
pub fn rescale_solution(sol: &PeriodicOrbitSolution) -> Result<PeriodicOrbitSolution, SpoError> {
    let (a_s, ls) = constant_scales(&sol.lambda.lambda_s)?;
    let (a_u, lu) = constant_scales(&sol.lambda.lambda_u)?;
    let mut out = sol.clone();
    for (k, p) in out.p.iter_mut().enumerate() {
        p.column_mut(2).scale_mut(a_s[k]);
        p.column_mut(3).scale_mut(a_u[k]);
    }
    let q = sol.len();
    out.lambda.lambda_s = vec![ls; q];
    out.lambda.lambda_u = vec![lu; q];
    Ok(out)
}

/// Swaps a real hyperbolic center pair so that `|lambda1| < |lambda2|`, by a
/// unitary change of the first two frame columns.
pub fn order_center_pair(sol: &mut PeriodicOrbitSolution) {
    let lam = &sol.lambda;
    if lam.stability() != Stability::Hyperbolic || lam.lambda1.norm() <= lam.lambda2.norm() {
        return;
    }
    let (l1, l2, t) = (lam.lambda1, lam.lambda2, lam.t);
    // Eigenvector of lambda2 for [[l1, t], [0, l2]].
    let (a, b) = (t, l2 - l1);
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (mut v0, mut v1) = (a / n, b / n);
    if v0.norm() > 0.0 {
        let phase = v0.conj() / v0.norm();
        v0 *= phase;
        v1 *= phase;
    }
    let v = Matrix2::new(v0, -v1.conj(), v1, v0.conj());
    let u = v.adjoint() * lam.center() * v;
    let mut emb = CMatrix::identity();
    emb.fixed_view_mut::<2, 2>(0, 0).copy_from(&v);
    sol.p.iter_mut().for_each(|p| *p *= emb);
    sol.lambda.lambda1 = u[(0, 0)];
    sol.lambda.lambda2 = u[(1, 1)];
    sol.lambda.t = u[(0, 1)];
}

/// Continues `sol0` to `eps_f` in `n` equal steps, each solve seeded by the
/// previous solution. A failed step is retried with half the step size, at
/// most `max_halvings` times; the returned list holds one solution per nominal step.
pub fn continue_family<M: SymplecticMap>(
    map: &M,
    sol0: &PeriodicOrbitSolution,
    eps_f: f64,
    n: usize,
    cfg: &ContinuationConfig,
) -> Result<Vec<PeriodicOrbitSolution>, SpoError> {
    if n == 0 {
        return Err(SpoError::Precondition("continuation needs at least one step".into()));
    }
    if !eps_f.is_finite() {
        return Err(SpoError::Precondition(format!("target eps {eps_f} is not finite")));
    }
    let targets: Vec<f64> = (1..=n).map(|i| continuation_grid(sol0.eps, eps_f, n, i)).collect();
    continue_along(map, sol0, &targets, cfg)
}

/// Point `i` of the grid of `n` equal steps from `eps_start` to `eps_f`.
pub fn continuation_grid(eps_start: f64, eps_f: f64, n: usize, i: usize) -> f64 {
    if i == n {
        return eps_f;
    }
    eps_start + (eps_f - eps_start) * i as f64 / n as f64
}

/// Continues through the given `eps` values in order, halving failed steps.
pub fn continue_along<M: SymplecticMap>(
    map: &M,
    sol0: &PeriodicOrbitSolution,
    targets: &[f64],
    cfg: &ContinuationConfig,
) -> Result<Vec<PeriodicOrbitSolution>, SpoError> {
    let mut cur = sol0.clone();
    let mut out = Vec::with_capacity(targets.len());
    for &target in targets {
        if !target.is_finite() {
            return Err(SpoError::Precondition(format!("target eps {target} is not finite")));
        }
        let mut h = target - cur.eps;
        let mut halvings = 0;
        while cur.eps != target {
            // The slack keeps rounding from leaving a sub-ulp remainder step.
            let next = if (target - cur.eps).abs() <= h.abs() * (1.0 + 1e-9) { target } else { cur.eps + h };
            match quasi_newton_solve(&map.with_eps(next), &cur, &cfg.solver) {
                Ok(sol) => {
                    let mut sol = rescale_solution(&sol)?;
                    if cfg.order_center {
                        order_center_pair(&mut sol);
                    }
                    sol.eps = next;
                    cur = sol;
                }
                Err(e) if e.is_non_convergence() || matches!(e, SpoError::Sequence(_)) => {
                    halvings += 1;
                    if halvings > cfg.max_halvings {
                        return Err(SpoError::Stalled { reached: cur.eps, reason: e.to_string() });
                    }
                    h *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        out.push(cur.clone());
    }
    Ok(out)
}

/// Multipliers in diagonal form with the matching frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalFloquet {
    pub p_bar: Vec<CMatrix>,
    pub lambda_bar: CMatrix,
    pub v_d: CMatrix,
    /// Set when `lambda1` and `lambda2` coincide to the defect threshold; the
    /// triangular form is returned unchanged.
    pub defective: bool,
}

impl DiagonalFloquet {
    pub fn multipliers(&self) -> [Complex64; 4] {
        std::array::from_fn(|i| self.lambda_bar[(i, i)])
    }
}

/// Removes the coupling `T` between the center multipliers.
pub fn diagonalize_floquet(sol: &PeriodicOrbitSolution) -> Result<DiagonalFloquet, SpoError> {
    let sol = if sol.lambda.is_constant() { sol.clone() } else { rescale_solution(sol)? };
    let lam = &sol.lambda;
    let (l1, l2) = (lam.lambda1, lam.lambda2);
    let defective = (l1 - l2).norm() < 1e-10 * l1.norm().max(1.0);
    let mut v_d = CMatrix::identity();
    if !defective {
        v_d[(0, 1)] = lam.t / (l2 - l1);
    }
    let mut lambda_bar = lam.matrix(0);
    if !defective {
        lambda_bar[(0, 1)] = Complex64::new(0.0, 0.0);
    }
    let p_bar = sol.p.iter().map(|p| p * v_d).collect();
    Ok(DiagonalFloquet { p_bar, lambda_bar, v_d, defective })
}
