//! Floquet frame of an unperturbed resonant orbit: power iteration for the
//! normal directions, then the symplectic-conjugate center column.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::newton::{compute_residual, evaluate, Evaluation};
use super::{omega, symplectic_j, CMatrix, NearDiagonalFloquet, PeriodicOrbitSolution, SolveMode, SpoError};
use crate::integrate::{flow, StroboscopicMap};
use crate::seqsolve::{
    constant_scales, solve_auto, solve_cohomological_real, SeqSolveConfig, SequenceEquation, SumTolerance,
};
use crate::systems::ResonanceLabel;
use crate::State;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    /// Largest admissible `|F(X(k)) - X(k+1)|` for a seed.
    pub seed_tol: f64,
    /// Power iteration stops when successive sweeps move every vector by less than this.
    pub power_tol: f64,
    pub power_max_sweeps: usize,
    /// Repeated squarings of the period map used to warm-start the power iteration.
    pub squarings: usize,
    /// Largest admissible `|B(k) - 1|`.
    pub b_tol: f64,
    /// Scale the two center columns of the frame to unit peak norm.
    pub balance_center: bool,
    pub seq: SeqSolveConfig,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self { seed_tol: 1e-8, power_tol: 1e-13, power_max_sweeps: 500, squarings: 40, b_tol: 1e-6, balance_center: true, seq: SeqSolveConfig::default() }
    }
}

/// Orbit points of an unperturbed resonant orbit and its flow vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub x: Vec<State>,
    pub dk: Vec<State>,
    pub residual: f64,
}

/// Samples the flow-periodic orbit through `x0` at multiples of the map period.
pub fn seed_unperturbed(
    map: &StroboscopicMap,
    x0: &State,
    label: ResonanceLabel,
    cfg: &InitConfig,
) -> Result<Seed, SpoError> {
    let map0 = map.with_eps(0.0);
    let q = label.q as usize;
    let sys = map0.system;
    // Times are reduced modulo the flow period so no point needs more than one
    // revolution of integration; long arcs of unstable orbits lose all accuracy.
    let flow_period = label.q as f64 * map0.period / label.p as f64;
    let x: Vec<State> = (0..q)
        .into_par_iter()
        .map(|k| {
            let t = (k as f64 * map0.period).rem_euclid(flow_period);
            flow(&sys, 0.0, x0, map0.theta0, t, &map0.integrator)
        })
        .collect::<Result<_, _>>()
        .map_err(crate::map::MapError::from)?;
    let fx: Vec<State> = x
        .par_iter()
        .map(|xk| map0.strobe(xk))
        .collect::<Result<_, _>>()
        .map_err(crate::map::MapError::from)?;
    let residual = (0..q).map(|k| (fx[k] - x[(k + 1) % q]).amax()).fold(0.0, f64::max);
    if !(residual < cfg.seed_tol) {
        let ratio = super::estimate_period(&sys, x0, flow_period, &map0.integrator)
            .map(|t| map0.period / t)
            .unwrap_or(f64::NAN);
        return Err(SpoError::SeedMismatch { residual, ratio });
    }
    let dk = x.iter().map(|xk| sys.rhs(xk, map0.theta0, 0.0)).collect();
    Ok(Seed { x, dk, residual })
}

/// Unit stable and unstable directions with their per-step multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicBundle {
    pub v_s: Vec<State>,
    pub v_u: Vec<State>,
    pub lambda_s: Vec<f64>,
    pub lambda_u: Vec<f64>,
    pub sweeps: [usize; 2],
}

enum Sweep {
    Converged(Vec<State>, usize),
    Flipped,
    Stalled,
}

/// Applies `m^(2^squarings)` to `v`, renormalizing, which is the power iteration
/// on the period map run on a doubling schedule.
fn warm_start(m: &Matrix4<f64>, v: State, squarings: usize) -> State {
    let mut p = *m / m.amax();
    for _ in 0..squarings {
        p = p * p;
        let n = p.amax();
        if !(n.is_finite() && n > 0.0) {
            return v.normalize();
        }
        p /= n;
    }
    let w = p * v;
    if w.norm() > 0.0 {
        w.normalize()
    } else {
        v.normalize()
    }
}

fn power_iterate(
    step: impl Fn(usize, &[State]) -> (usize, State),
    q: usize,
    start: State,
    cfg: &InitConfig,
) -> Sweep {
    let mut v = vec![start.normalize(); q];
    for sweep in 1..=cfg.power_max_sweeps {
        let old = v.clone();
        for i in 0..q {
            let (k, w) = step(i, &v);
            v[k] = w.normalize();
        }
        let same = (0..q).map(|k| (v[k] - old[k]).amax()).fold(0.0, f64::max);
        if same < cfg.power_tol {
            return Sweep::Converged(v, sweep);
        }
        let flip = (0..q).map(|k| (v[k] + old[k]).amax()).fold(0.0, f64::max);
        if flip < cfg.power_tol.sqrt() {
            return Sweep::Flipped;
        }
    }
    Sweep::Stalled
}

/// Power iteration along the orbit for the strong stable and unstable directions.
///
/// The start vector is first pushed through repeated squares of the period map,
/// so weakly hyperbolic orbits need only a handful of per-point sweeps.
/// Returns [`SpoError::NeedsDoubling`] when the iterates alternate in sign, or
/// fail to settle from every start, which signals a negative multiplier.
pub fn init_hyperbolic_bundle(
    dk: &[State],
    df: &[Matrix4<f64>],
    cfg: &InitConfig,
) -> Result<HyperbolicBundle, SpoError> {
    let q = df.len();
    let inv: Vec<Matrix4<f64>> = df
        .iter()
        .enumerate()
        .map(|(k, m)| m.try_inverse().ok_or(SpoError::SingularFrame(k)))
        .collect::<Result<_, _>>()?;
    let monodromy = df.iter().fold(Matrix4::identity(), |acc, m| m * acc);
    let inv_monodromy = inv.iter().rev().fold(Matrix4::identity(), |acc, m| m * acc);
    // Generic entries: symmetric starts such as (1, 1, 1, 1) can have no
    // component along a saddle direction of a decoupled system.
    let starts = [
        Vector4::new(0.8137, -0.3529, 0.6142, 1.2718),
        Vector4::new(-0.4271, 1.1093, 0.2356, -0.7814),
        Vector4::new(1.3127, 0.5318, -0.9461, 0.1772),
    ];
    let tangent = |v: &[State]| {
        (0..q)
            .map(|k| {
                let n = dk[k].norm();
                if n > 0.0 {
                    (v[k].dot(&dk[k]) / n).abs()
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    };
    let run = |forward: bool| -> Result<(Vec<State>, usize), SpoError> {
        let mut stalled = false;
        for start in &starts {
            let res = if forward {
                let v0 = warm_start(&monodromy, *start, cfg.squarings);
                power_iterate(
                    |i, v| {
                        let k = (i + 1) % q;
                        let km = (k + q - 1) % q;
                        (k, df[km] * v[km])
                    },
                    q,
                    v0,
                    cfg,
                )
            } else {
                let v0 = warm_start(&inv_monodromy, *start, cfg.squarings);
                power_iterate(|i, v| {
                    let k = q - 1 - i;
                    (k, inv[k] * v[(k + 1) % q])
                }, q, v0, cfg)
            };
            match res {
                Sweep::Converged(v, n) => {
                    if tangent(&v) > 1.0 - 1e-6 {
                        continue;
                    }
                    return Ok((v, n));
                }
                Sweep::Flipped => return Err(SpoError::NeedsDoubling),
                // Slow drift toward the center block; another start may do better.
                Sweep::Stalled => stalled = true,
            }
        }
        if stalled {
            return Err(SpoError::NeedsDoubling);
        }
        Err(SpoError::PowerIteration { which: if forward { "unstable" } else { "stable" } })
    };
    let (v_u, nu) = run(true)?;
    let (v_s, ns) = run(false)?;
    let lambda_s = (0..q).map(|k| 1.0 / (inv[k] * v_s[(k + 1) % q]).norm()).collect();
    let lambda_u = (0..q).map(|k| (df[k] * v_u[k]).norm()).collect();
    Ok(HyperbolicBundle { v_s, v_u, lambda_s, lambda_u, sweeps: [ns, nu] })
}

/// Intermediate quantities of the center-column construction.
#[derive(Debug, Clone, PartialEq)]
pub struct InitCenterWorkspace {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub v_c: Vec<State>,
    pub shift: Vec<f64>,
    pub j: Matrix4<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterBundle {
    pub v2: Vec<State>,
    pub t: f64,
    pub workspace: InitCenterWorkspace,
}

/// Second center column, symplectically conjugate to the flow direction.
///
/// `v_s`, `v_u` must already carry constant multipliers `lambda_s`, `lambda_u`.
pub fn init_center_bundle(
    dk: &[State],
    df: &[Matrix4<f64>],
    v_s: &[State],
    v_u: &[State],
    lambda_s: f64,
    lambda_u: f64,
    cfg: &InitConfig,
) -> Result<CenterBundle, SpoError> {
    let q = dk.len();
    let j = symplectic_j();
    let j_inv = -j;
    let w: Vec<State> = dk.iter().map(|v| j_inv * v / v.norm_squared()).collect();
    let mut coef = vec![Vector4::zeros(); q];
    for k in 0..q {
        let n = (k + 1) % q;
        let m = Matrix4::from_columns(&[dk[n], w[n], v_s[n], v_u[n]]);
        let rhs = df[k] * w[k];
        coef[k] = m.lu().solve(&rhs).ok_or(SpoError::SingularFrame(n))?;
        if (coef[k][1] - 1.0).abs() > cfg.b_tol {
            return Err(SpoError::Symplecticity { k, value: coef[k][1] });
        }
    }
    let col = |i: usize| -> Vec<f64> { coef.iter().map(|c| c[i]).collect() };
    let (a, b, c, d) = (col(0), col(1), col(2), col(3));
    let solve = |l: f64, rhs: &[f64]| -> Result<Vec<f64>, SpoError> {
        let eq = SequenceEquation::real(&vec![l; q], &vec![1.0; q], &rhs.iter().map(|x| -x).collect::<Vec<_>>())?;
        Ok(solve_auto(&eq, &cfg.seq)?.into_iter().map(|z| z.re).collect())
    };
    let f1 = solve(lambda_s, &c)?;
    let f2 = solve(lambda_u, &d)?;
    let v_c: Vec<State> = (0..q).map(|k| w[k] + v_s[k] * f1[k] + v_u[k] * f2[k]).collect();
    let t = a.iter().sum::<f64>() / q as f64;
    let rhs: Vec<f64> = a.iter().map(|ak| -(ak - t)).collect();
    let shift = solve_cohomological_real(&rhs, SumTolerance::Unchecked)?;
    let v2 = (0..q).map(|k| v_c[k] + dk[k] * shift[k]).collect();
    Ok(CenterBundle { v2, t, workspace: InitCenterWorkspace { a, b, c, d, f1, f2, v_c, shift, j } })
}

/// Full initialization: seed, normal bundle (doubling the orbit on a negative
/// multiplier), constant rescaling and center bundle, assembled at `eps = 0`.
pub fn initialize(
    map: &StroboscopicMap,
    x0: &State,
    label: ResonanceLabel,
    mode: SolveMode,
    cfg: &InitConfig,
) -> Result<PeriodicOrbitSolution, SpoError> {
    let map0 = map.with_eps(0.0);
    let seed = seed_unperturbed(&map0, x0, label, cfg)?;
    let ev = evaluate(&map0, &seed.x)?;
    let (x, dk, ev, bundle) = match init_hyperbolic_bundle(&seed.dk, &ev.df, cfg) {
        Ok(b) => (seed.x, seed.dk, ev, b),
        Err(SpoError::NeedsDoubling) => {
            let twice = |v: &Vec<State>| [v.as_slice(), v.as_slice()].concat();
            let ev2 = Evaluation { fx: twice(&ev.fx), df: [ev.df.as_slice(), ev.df.as_slice()].concat() };
            let (x2, dk2) = (twice(&seed.x), twice(&seed.dk));
            match init_hyperbolic_bundle(&dk2, &ev2.df, cfg) {
                Ok(b) => (x2, dk2, ev2, b),
                Err(SpoError::NeedsDoubling) => {
                    return Err(SpoError::PowerIteration { which: "stable/unstable (doubled)" })
                }
                Err(e) => return Err(e),
            }
        }
        Err(e) => return Err(e),
    };
    let (a_s, ls) = constant_scales(&bundle.lambda_s)?;
    let (a_u, lu) = constant_scales(&bundle.lambda_u)?;
    let v_s: Vec<State> = bundle.v_s.iter().zip(&a_s).map(|(v, a)| v * *a).collect();
    let v_u: Vec<State> = bundle.v_u.iter().zip(&a_u).map(|(v, a)| v * *a).collect();
    let df = &ev.df;
    let center = init_center_bundle(&dk, df, &v_s, &v_u, ls, lu, cfg)?;
    let q = x.len();
    // Constant column scales keep the layout of Lambda and only rescale T.
    let (c1, c2) = if cfg.balance_center {
        let peak = |v: &[State]| v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        (1.0 / peak(&dk), 1.0 / peak(&center.v2))
    } else {
        (1.0, 1.0)
    };
    let p = (0..q)
        .map(|k| {
            Matrix4::from_columns(&[dk[k] * c1, center.v2[k] * c2, v_s[k], v_u[k]])
                .map(|z| Complex64::new(z, 0.0))
        })
        .collect::<Vec<CMatrix>>();
    let one = Complex64::new(1.0, 0.0);
    let mut sol = PeriodicOrbitSolution {
        eps: 0.0,
        label,
        x,
        p,
        lambda: NearDiagonalFloquet {
            lambda1: one,
            lambda2: one,
            t: Complex64::new(center.t * c2 / c1, 0.0),
            lambda_s: vec![ls; q],
            lambda_u: vec![lu; q],
        },
        mode,
        tol: cfg.seed_tol,
        history: Vec::new(),
    };
    // Record the bound the initial frame actually meets.
    let res = compute_residual(&sol, &ev)?;
    sol.tol = sol.tol.max(res.e_norm).max(res.e_red_norm);
    Ok(sol)
}

/// `Omega(DK(k), v_c(k))` for each `k`; identically one in exact arithmetic.
pub fn area_check(dk: &[State], ws: &InitCenterWorkspace) -> Vec<f64> {
    dk.iter().zip(&ws.v_c).map(|(a, b)| omega(a, b)).collect()
}
