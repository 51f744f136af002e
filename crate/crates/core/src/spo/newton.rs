//! Quasi-Newton correction of `(X, P, Lambda)`.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sup_norm, to_complex, CMatrix, CVector, NearDiagonalFloquet, PeriodicOrbitSolution, SolveMode, SpoError};
use crate::map::SymplecticMap;
use crate::seqsolve::{solve_auto, solve_cohomological, SeqSolveConfig, SequenceEquation, SumTolerance};
use crate::State;

const L: usize = 0;
const C: usize = 1;
const S: usize = 2;
const U: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Give up early once the residual exceeds this.
    pub divergence_limit: f64,
    pub seq: SeqSolveConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 25,
            divergence_limit: 1e3,
            seq: SeqSolveConfig { allow_mixed: true, ..SeqSolveConfig::default() },
        }
    }
}

/// Map values and Jacobians at every orbit point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub fx: Vec<State>,
    pub df: Vec<Matrix4<f64>>,
}

/// Evaluates `F` and `DF` at each point, independently and in parallel.
pub fn evaluate<M: SymplecticMap>(map: &M, x: &[State]) -> Result<Evaluation, SpoError> {
    let pairs: Result<Vec<_>, _> = x.par_iter().map(|xk| map.apply_jacobian(xk)).collect();
    let (fx, df) = pairs?.into_iter().unzip();
    Ok(Evaluation { fx, df })
}

#[derive(Debug, Clone)]
pub struct NewtonResidual {
    pub e: Vec<State>,
    pub e_red: Vec<CMatrix>,
    pub e_norm: f64,
    pub e_red_norm: f64,
    /// `P(k)^{-1}`, reused by the corrections.
    pub p_inv: Vec<CMatrix>,
}

fn inverses(p: &[CMatrix]) -> Result<Vec<CMatrix>, SpoError> {
    p.iter().enumerate().map(|(k, m)| m.try_inverse().ok_or(SpoError::SingularFrame(k))).collect()
}

fn reduced_error(
    p: &[CMatrix],
    p_inv: &[CMatrix],
    df: &[Matrix4<f64>],
    lambda: &NearDiagonalFloquet,
) -> Vec<CMatrix> {
    let q = p.len();
    (0..q)
        .map(|k| p_inv[(k + 1) % q] * to_complex(&df[k]) * p[k] - lambda.matrix(k))
        .collect()
}

/// `E(k) = F(X(k)) - X(k+1)` and `E_red(k) = P(k+1)^{-1} DF(X(k)) P(k) - Lambda(k)`.
pub fn compute_residual(sol: &PeriodicOrbitSolution, ev: &Evaluation) -> Result<NewtonResidual, SpoError> {
    let q = sol.x.len();
    let p_inv = inverses(&sol.p)?;
    let e: Vec<State> = (0..q).map(|k| ev.fx[k] - sol.x[(k + 1) % q]).collect();
    let e_red = reduced_error(&sol.p, &p_inv, &ev.df, &sol.lambda);
    let e_norm = e.iter().map(|v| v.amax()).fold(0.0, f64::max);
    let e_red_norm = e_red.iter().map(sup_norm).fold(0.0, f64::max);
    Ok(NewtonResidual { e, e_red, e_norm, e_red_norm, p_inv })
}

fn unit_center(sol: &PeriodicOrbitSolution) -> bool {
    let one = Complex64::new(1.0, 0.0);
    sol.mode == SolveMode::FlowMap || (sol.lambda.lambda1 == one && sol.lambda.lambda2 == one)
}

fn constant_eq(la: Complex64, lb: Complex64, b: Vec<Complex64>) -> Result<SequenceEquation, SpoError> {
    Ok(SequenceEquation::constant(la, lb, b)?)
}

fn real_seq(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

fn mean(v: &[Complex64]) -> Complex64 {
    v.iter().sum::<Complex64>() / v.len() as f64
}

/// Solves `l u(k) - l u(k+1) = b(k)`, i.e. the cohomological equation for `b / l`.
fn cohom_scaled(l: Complex64, b: &[Complex64]) -> Result<Vec<Complex64>, SpoError> {
    let scaled: Vec<Complex64> = b.iter().map(|x| x / l).collect();
    Ok(solve_cohomological(&scaled, SumTolerance::Unchecked)?)
}

/// Solves `l1 u(k) - l2 u(k+1) = b(k)` with constant multipliers, switching to the
/// cohomological form when the two coincide.
fn solve_pair(l1: Complex64, l2: Complex64, b: Vec<Complex64>, cfg: &SeqSolveConfig) -> Result<Vec<Complex64>, SpoError> {
    if l1 == l2 {
        cohom_scaled(l1, &b)
    } else {
        Ok(solve_auto(&constant_eq(l1, l2, b)?, cfg)?)
    }
}

/// Correction of the orbit points: solves `Lambda xi - xi(+) = -P(+)^{-1} E`
/// component by component and returns `Re(X + P xi)`.
pub fn x_step(sol: &PeriodicOrbitSolution, res: &NewtonResidual, cfg: &SolverConfig) -> Result<Vec<State>, SpoError> {
    let q = sol.x.len();
    let lam = &sol.lambda;
    let eta: Vec<CVector> = (0..q)
        .map(|k| -(res.p_inv[(k + 1) % q] * res.e[k].map(|x| Complex64::new(x, 0.0))))
        .collect();
    let comp = |i: usize| -> Vec<Complex64> { eta.iter().map(|v| v[i]).collect() };
    let one = Complex64::new(1.0, 0.0);
    let (xi1, xi2) = if unit_center(sol) {
        let mut xi2 = solve_cohomological(&comp(C), SumTolerance::Unchecked)?;
        let e1 = comp(L);
        if lam.t.norm() > 0.0 {
            let shift: Complex64 =
                (0..q).map(|k| e1[k] - lam.t * xi2[k]).sum::<Complex64>() / (q as f64 * lam.t);
            xi2.iter_mut().for_each(|x| *x += shift);
        }
        let b1: Vec<Complex64> = (0..q).map(|k| e1[k] - lam.t * xi2[k]).collect();
        (solve_cohomological(&b1, SumTolerance::Unchecked)?, xi2)
    } else {
        let xi2 = solve_auto(&constant_eq(lam.lambda2, one, comp(C))?, &cfg.seq)?;
        let e1 = comp(L);
        let b1: Vec<Complex64> = (0..q).map(|k| e1[k] - lam.t * xi2[k]).collect();
        (solve_auto(&constant_eq(lam.lambda1, one, b1)?, &cfg.seq)?, xi2)
    };
    let ones = vec![one; q];
    let xi3 = solve_auto(&SequenceEquation::new(real_seq(&lam.lambda_s), ones.clone(), comp(S))?, &cfg.seq)?;
    let xi4 = solve_auto(&SequenceEquation::new(real_seq(&lam.lambda_u), ones, comp(U))?, &cfg.seq)?;
    Ok((0..q)
        .map(|k| {
            let xi = CVector::new(xi1[k], xi2[k], xi3[k], xi4[k]);
            let dx = sol.p[k] * xi;
            sol.x[k] + dx.map(|z| z.re)
        })
        .collect())
}

/// Center block of `Lambda_c` before Schur normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterBlock {
    pub a: Matrix2<Complex64>,
    pub lambda_s: Vec<f64>,
    pub lambda_u: Vec<f64>,
}

/// Output of [`p_step`]: corrected frame, multipliers, and the correction itself.
#[derive(Debug, Clone)]
pub struct PStep {
    pub p: Vec<CMatrix>,
    pub block: CenterBlock,
    pub q: Vec<CMatrix>,
    pub delta_s: Complex64,
    pub delta_t: Complex64,
    pub delta_l1: Complex64,
    pub delta_l2: Complex64,
    pub e_red_norm: f64,
}

/// Correction of the frame and multipliers from `-E_red = Lambda Q - Q(+) Lambda - dLambda`,
/// with `DF` already re-evaluated at the corrected points.
pub fn p_step(sol: &PeriodicOrbitSolution, df: &[Matrix4<f64>], cfg: &SolverConfig) -> Result<PStep, SpoError> {
    let q = sol.x.len();
    let lam = &sol.lambda;
    let p_inv = inverses(&sol.p)?;
    let e = reduced_error(&sol.p, &p_inv, df, lam);
    let e_red_norm = e.iter().map(sup_norm).fold(0.0, f64::max);
    let ent = |i: usize, j: usize| -> Vec<Complex64> { e.iter().map(|m| m[(i, j)]).collect() };
    let neg = |v: Vec<Complex64>| -> Vec<Complex64> { v.into_iter().map(|x| -x).collect() };
    let ls = real_seq(&lam.lambda_s);
    let lu = real_seq(&lam.lambda_u);
    let l1 = vec![lam.lambda1; q];
    let l2 = vec![lam.lambda2; q];
    let t = lam.t;
    let seq = |la: &Vec<Complex64>, lb: &Vec<Complex64>, b: Vec<Complex64>| -> Result<Vec<Complex64>, SpoError> {
        Ok(solve_auto(&SequenceEquation::new(la.clone(), lb.clone(), b)?, &cfg.seq)?)
    };
    let nx = |k: usize| (k + 1) % q;

    let q_cs = seq(&l2, &ls, neg(ent(C, S)))?;
    let q_cu = seq(&l2, &lu, neg(ent(C, U)))?;
    let q_sl = seq(&ls, &l1, neg(ent(S, L)))?;
    let q_su = seq(&ls, &lu, neg(ent(S, U)))?;
    let q_ul = seq(&lu, &l1, neg(ent(U, L)))?;
    let q_us = seq(&lu, &ls, neg(ent(U, S)))?;

    let e_ls = ent(L, S);
    let q_ls = seq(&l1, &ls, (0..q).map(|k| -e_ls[k] - t * q_cs[k]).collect())?;
    let e_lu = ent(L, U);
    let q_lu = seq(&l1, &lu, (0..q).map(|k| -e_lu[k] - t * q_cu[k]).collect())?;
    let e_sc = ent(S, C);
    let q_sc = seq(&ls, &l2, (0..q).map(|k| -e_sc[k] + t * q_sl[nx(k)]).collect())?;
    let e_uc = ent(U, C);
    let q_uc = seq(&lu, &l2, (0..q).map(|k| -e_uc[k] + t * q_ul[nx(k)]).collect())?;

    let perturbed = sol.mode == SolveMode::Perturbed;
    let zero = Complex64::new(0.0, 0.0);
    let e_cl = ent(C, L);
    let delta_s = if perturbed { mean(&e_cl) } else { zero };
    let q_cl = solve_pair(lam.lambda2, lam.lambda1, e_cl.iter().map(|x| delta_s - x).collect(), &cfg.seq)?;

    let e_ll = ent(L, L);
    let e_cc = ent(C, C);
    let (delta_l1, delta_l2) = if perturbed {
        let d1: Vec<Complex64> = (0..q).map(|k| e_ll[k] + t * q_cl[k]).collect();
        let d2: Vec<Complex64> = (0..q).map(|k| e_cc[k] - t * q_cl[nx(k)]).collect();
        (mean(&d1), mean(&d2))
    } else {
        (zero, zero)
    };
    let q_ll = cohom_scaled(lam.lambda1, &(0..q).map(|k| delta_l1 - e_ll[k] - t * q_cl[k]).collect::<Vec<_>>())?;
    let q_cc = cohom_scaled(lam.lambda2, &(0..q).map(|k| delta_l2 - e_cc[k] + t * q_cl[nx(k)]).collect::<Vec<_>>())?;

    let e_lc = ent(L, C);
    let dt: Vec<Complex64> = (0..q).map(|k| e_lc[k] + t * q_cc[k] - t * q_ll[nx(k)]).collect();
    let delta_t = mean(&dt);
    let q_lc = solve_pair(
        lam.lambda1,
        lam.lambda2,
        (0..q).map(|k| delta_t - e_lc[k] - t * q_cc[k] + t * q_ll[nx(k)]).collect(),
        &cfg.seq,
    )?;

    // The real parts of the hyperbolic diagonal go into the multipliers; the
    // imaginary parts are phase drift of the real columns, removed by an
    // imaginary rescaling.
    let phase = |i: usize, l: &[f64]| -> Result<Vec<Complex64>, SpoError> {
        let b: Vec<Complex64> = e.iter().zip(l).map(|(m, &lk)| Complex64::new(0.0, -m[(i, i)].im / lk)).collect();
        Ok(solve_cohomological(&b, SumTolerance::Unchecked)?)
    };
    let q_ss = phase(S, &lam.lambda_s)?;
    let q_uu = phase(U, &lam.lambda_u)?;

    let mut qm = vec![CMatrix::zeros(); q];
    for k in 0..q {
        let m = &mut qm[k];
        m[(L, L)] = q_ll[k];
        m[(L, C)] = q_lc[k];
        m[(L, S)] = q_ls[k];
        m[(L, U)] = q_lu[k];
        m[(C, L)] = q_cl[k];
        m[(C, C)] = q_cc[k];
        m[(C, S)] = q_cs[k];
        m[(C, U)] = q_cu[k];
        m[(S, L)] = q_sl[k];
        m[(S, C)] = q_sc[k];
        m[(S, S)] = q_ss[k];
        m[(S, U)] = q_su[k];
        m[(U, L)] = q_ul[k];
        m[(U, C)] = q_uc[k];
        m[(U, S)] = q_us[k];
        m[(U, U)] = q_uu[k];
    }
    let p: Vec<CMatrix> = (0..q).map(|k| sol.p[k] * (CMatrix::identity() + qm[k])).collect();
    let e_ss = ent(S, S);
    let e_uu = ent(U, U);
    let block = CenterBlock {
        a: Matrix2::new(lam.lambda1 + delta_l1, t + delta_t, delta_s, lam.lambda2 + delta_l2),
        lambda_s: (0..q).map(|k| lam.lambda_s[k] + e_ss[k].re).collect(),
        lambda_u: (0..q).map(|k| lam.lambda_u[k] + e_uu[k].re).collect(),
    };
    Ok(PStep { p, block, q: qm, delta_s, delta_t, delta_l1, delta_l2, e_red_norm })
}

/// Unitary `V1` with `V1^H A V1` upper triangular, keeping `V1` close to the
/// identity when `A` is nearly triangular.
fn schur2(a: &Matrix2<Complex64>) -> (Matrix2<Complex64>, Matrix2<Complex64>) {
    let zero = Complex64::new(0.0, 0.0);
    if a[(1, 0)] == zero {
        return (Matrix2::identity(), *a);
    }
    let half_tr = (a[(0, 0)] + a[(1, 1)]) * 0.5;
    let disc = ((a[(0, 0)] - a[(1, 1)]) * (a[(0, 0)] - a[(1, 1)]) * 0.25 + a[(0, 1)] * a[(1, 0)]).sqrt();
    let (m1, m2) = (half_tr + disc, half_tr - disc);
    let mu = if (m1 - a[(0, 0)]).norm() <= (m2 - a[(0, 0)]).norm() { m1 } else { m2 };
    let c1 = [a[(0, 1)], mu - a[(0, 0)]];
    let c2 = [mu - a[(1, 1)], a[(1, 0)]];
    let n1 = (c1[0].norm_sqr() + c1[1].norm_sqr()).sqrt();
    let n2 = (c2[0].norm_sqr() + c2[1].norm_sqr()).sqrt();
    let (mut v0, mut v1) = if n1 >= n2 { (c1[0] / n1, c1[1] / n1) } else { (c2[0] / n2, c2[1] / n2) };
    if v0.norm() > 0.0 {
        let phase = v0.conj() / v0.norm();
        v0 *= phase;
        v1 *= phase;
    }
    let v = Matrix2::new(v0, -v1.conj(), v1, v0.conj());
    let mut u = v.adjoint() * a * v;
    u[(1, 0)] = zero;
    (v, u)
}

/// Restores the triangular center block by a unitary change of the first two columns.
pub fn schur_normalize(p_c: &[CMatrix], block: &CenterBlock) -> (Vec<CMatrix>, NearDiagonalFloquet) {
    let (v1, u) = schur2(&block.a);
    let mut v = CMatrix::identity();
    v.fixed_view_mut::<2, 2>(0, 0).copy_from(&v1);
    let p = p_c.iter().map(|m| m * v).collect();
    let lambda = NearDiagonalFloquet {
        lambda1: u[(0, 0)],
        lambda2: u[(1, 1)],
        t: u[(0, 1)],
        lambda_s: block.lambda_s.clone(),
        lambda_u: block.lambda_u.clone(),
    };
    (p, lambda)
}

/// Iterates residual, X-step, P-step and Schur normalization until both
/// residual norms drop below the tolerance.
pub fn quasi_newton_solve<M: SymplecticMap>(
    map: &M,
    initial: &PeriodicOrbitSolution,
    cfg: &SolverConfig,
) -> Result<PeriodicOrbitSolution, SpoError> {
    let mut sol = initial.clone();
    sol.eps = map.eps();
    sol.tol = cfg.tol;
    let mut history = Vec::new();
    let mut ev = evaluate(map, &sol.x)?;
    for it in 0..=cfg.max_iter {
        let res = compute_residual(&sol, &ev)?;
        history.push([res.e_norm, res.e_red_norm]);
        let worst = res.e_norm.max(res.e_red_norm);
        if worst < cfg.tol {
            sol.history = history;
            return Ok(sol);
        }
        if it == cfg.max_iter || !worst.is_finite() || worst > cfg.divergence_limit {
            break;
        }
        let x_new = x_step(&sol, &res, cfg)?;
        ev = evaluate(map, &x_new)?;
        sol.x = x_new;
        let step = p_step(&sol, &ev.df, cfg)?;
        let (p, lambda) = schur_normalize(&step.p, &step.block);
        sol.p = p;
        sol.lambda = lambda;
    }
    Err(SpoError::NotConverged { history })
}
