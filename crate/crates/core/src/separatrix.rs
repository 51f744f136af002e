//! Weak stable and unstable manifolds of a hyperbolic SPO inside the NHIM,
//! computed order by order as `W(k, s) = sum_d W_d(k) s^d` with
//! `F(W(k, s)) = W(k + 1, lambda s)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::{MapError, SymplecticMap};
use crate::seqsolve::{solve_auto, SeqSolveConfig, SeqSolveError, SequenceEquation};
use crate::spo::{diagonalize_floquet, CMatrix, CVector, PeriodicOrbitSolution, SpoError, Stability};
use crate::systems::ResonanceLabel;
use crate::taylor::{SeriesVector, TruncatedSeries};
use crate::State;

/// Upper end of the bisection bracket for fundamental domains.
pub const DOMAIN_CEILING: f64 = 10.0;

/// Distance of `|Lambda_ii / lambda^d|` from one below which an order is resonant.
pub const RESONANCE_MARGIN: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeparatrixError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("resonance at order {order} in component {component}: |Lambda_ii lambda^-d| = {ratio}")]
    Resonance { component: usize, order: usize, ratio: f64 },
    #[error("jet transport failed at order {order}; try a smaller scale alpha: {source}")]
    Jet { order: usize, source: MapError },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Orbit(#[from] SpoError),
    #[error(transparent)]
    Sequence(#[from] SeqSolveError),
    #[error("invariance residual {residual:e} at s = 0 of orbit point {k} already exceeds E_tol = {e_tol:e}")]
    Inconsistent { k: usize, residual: f64, e_tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Tangent to the center multiplier inside the unit circle.
    WeakStable,
    WeakUnstable,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Self::WeakStable => "weak_stable",
            Self::WeakUnstable => "weak_unstable",
        }
    }
}

/// Scale of the linear term `W_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Fit so that `max_k |W_d(k)|` lands inside `[1e-12, 1e3]` at the final degree.
    Auto,
    Fixed(f64),
}

/// Per-k radii on which the truncated parameterization is invariant to `e_tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundamentalDomain {
    pub radii: Vec<f64>,
    pub min: f64,
    pub e_tol: f64,
    /// Norm of the invariance residual; always the max norm.
    pub norm: String,
    pub samples_per_probe: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparatrixParameterization {
    pub label: ResonanceLabel,
    pub branch: Branch,
    pub eps: f64,
    /// Internal multiplier of the branch.
    pub lambda: f64,
    /// `w[k][d]` is `W_d(k)`.
    pub w: Vec<Vec<State>>,
    pub alpha: f64,
    pub domain: Option<FundamentalDomain>,
}

impl SeparatrixParameterization {
    pub fn degree(&self) -> usize {
        self.w[0].len() - 1
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// `W(k, s)` by Horner's rule.
    pub fn eval(&self, k: usize, s: f64) -> State {
        self.w[k].iter().rev().fold(State::zeros(), |acc, c| acc * s + c)
    }

    /// `max_k |W_d(k)|`.
    pub fn coefficient_norm(&self, d: usize) -> f64 {
        self.w.iter().map(|wk| wk[d].amax()).fold(0.0, f64::max)
    }

    /// `|F(W(k, s)) - W(k + 1, lambda s)|` in the max norm; one map application.
    pub fn residual<M: SymplecticMap>(&self, map: &M, k: usize, s: f64) -> Result<f64, MapError> {
        let q = self.len();
        let image = map.apply(&self.eval(k, s))?;
        Ok((image - self.eval((k + 1) % q, self.lambda * s)).amax())
    }
}

/// Order-`d` data: the error coefficients and the correction solving them.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderCorrection {
    pub e_d: Vec<State>,
    pub eta: Vec<CVector>,
    pub v_d: Vec<CVector>,
}

fn series_of(wk: &[State], degree: usize) -> SeriesVector {
    std::array::from_fn(|i| {
        let mut c: Vec<f64> = wk.iter().map(|v| v[i]).collect();
        c.resize(degree + 1, 0.0);
        TruncatedSeries::new(c)
    })
}

fn coefficient(v: &SeriesVector, j: usize) -> State {
    State::from_fn(|i, _| v[i].coeff(j))
}

/// Coefficients `0..=d` of `F(W(k, s)) - W(k + 1, lambda s)` for every `k`,
/// with `W` truncated to the coefficients in `w`.
///
/// Jets of stroboscopic maps are transported through the flow; explicit maps
/// are evaluated directly on the series.
pub fn invariance_coefficients<M: SymplecticMap>(
    map: &M,
    w: &[Vec<State>],
    lambda: f64,
    d: usize,
) -> Result<Vec<Vec<State>>, SeparatrixError> {
    let q = w.len();
    let images: Result<Vec<SeriesVector>, MapError> =
        w.par_iter().map(|wk| map.apply_jet(&series_of(wk, d))).collect();
    let images = images.map_err(|source| SeparatrixError::Jet { order: d, source })?;
    Ok((0..q)
        .map(|k| {
            let next = &w[(k + 1) % q];
            (0..=d)
                .map(|j| {
                    let shifted = next.get(j).map_or(State::zeros(), |c| c * lambda.powi(j as i32));
                    coefficient(&images[k], j) - shifted
                })
                .collect()
        })
        .collect())
}

/// `E_d(k)`, the order-`d` coefficient of the invariance error of `W_{<d}`.
///
/// `w` must hold exactly the coefficients `0..d`; orders below `d` are
/// checked to vanish to `lower_tol` relative to the coefficient scale.
pub fn order_error<M: SymplecticMap>(
    map: &M,
    w: &[Vec<State>],
    lambda: f64,
    d: usize,
    lower_tol: f64,
) -> Result<Vec<State>, SeparatrixError> {
    if w.iter().any(|wk| wk.len() != d) {
        return Err(SeparatrixError::Precondition(format!("order {d} needs exactly {d} known coefficients")));
    }
    let coeffs = invariance_coefficients(map, w, lambda, d)?;
    for j in 0..d {
        let scale = w.iter().map(|wk| wk[j].amax()).fold(1.0, f64::max);
        let worst = coeffs.iter().map(|c| c[j].amax()).fold(0.0, f64::max);
        if worst > lower_tol * scale {
            return Err(SeparatrixError::Precondition(format!(
                "invariance fails at order {j} < {d}: coefficient {worst:e}"
            )));
        }
    }
    Ok(coeffs.into_iter().map(|c| c[d]).collect())
}

/// Solves `Lambda_ii V_i(k) - lambda^d V_i(k+1) = eta_i(k)` with
/// `eta = -P(k+1)^{-1} E_d(k)` and returns `W_d(k) = Re P(k) V(k)`.
pub fn solve_order(
    e_d: &[State],
    p_bar: &[CMatrix],
    multipliers: &[Complex64; 4],
    lambda: f64,
    d: usize,
) -> Result<(Vec<State>, OrderCorrection), SeparatrixError> {
    let q = e_d.len();
    if d < 2 {
        return Err(SeparatrixError::Precondition(format!("orders below 2 are fixed by the orbit, got {d}")));
    }
    if p_bar.len() != q {
        return Err(SeparatrixError::Precondition("frame and error lengths differ".into()));
    }
    let lam_d = Complex64::new(lambda.powi(d as i32), 0.0);
    let p_inv: Vec<CMatrix> = p_bar
        .iter()
        .enumerate()
        .map(|(k, p)| p.try_inverse().ok_or(SpoError::SingularFrame(k)))
        .collect::<Result<_, _>>()?;
    let eta: Vec<CVector> =
        (0..q).map(|k| -(p_inv[(k + 1) % q] * e_d[k].map(|x| Complex64::new(x, 0.0)))).collect();
    let mut v_d = vec![CVector::zeros(); q];
    for (i, &li) in multipliers.iter().enumerate() {
        let ratio = (li / lam_d).norm();
        if (ratio - 1.0).abs() < RESONANCE_MARGIN {
            return Err(SeparatrixError::Resonance { component: i, order: d, ratio });
        }
        let b: Vec<Complex64> = eta.iter().map(|v| v[i]).collect();
        let eq = SequenceEquation::constant(li, lam_d, b)?;
        let vi = solve_auto(&eq, &SeqSolveConfig::default())?;
        for (v, x) in v_d.iter_mut().zip(vi) {
            v[i] = x;
        }
    }
    let w_d = (0..q).map(|k| (p_bar[k] * v_d[k]).map(|z| z.re)).collect();
    Ok((w_d, OrderCorrection { e_d: e_d.to_vec(), eta, v_d }))
}

/// Builds the branch through degree `d_max`.
///
/// `W_1(k)` is the real Floquet direction of the branch, normalized so that
/// `max_k |W_1(k)| = 1` and then multiplied by the scale.
pub fn parameterize<M: SymplecticMap>(
    map: &M,
    sol: &PeriodicOrbitSolution,
    branch: Branch,
    d_max: usize,
    scale: Scale,
) -> Result<SeparatrixParameterization, SeparatrixError> {
    if sol.lambda.stability() != Stability::Hyperbolic {
        return Err(SeparatrixError::Precondition(format!(
            "center multipliers {} and {} are not a real hyperbolic pair",
            sol.lambda.lambda1, sol.lambda.lambda2
        )));
    }
    if d_max == 0 {
        return Err(SeparatrixError::Precondition("degree must be at least 1".into()));
    }
    let map = map.with_eps(sol.eps);
    let diag = diagonalize_floquet(sol)?;
    let mult = diag.multipliers();
    let col = match (branch, mult[0].norm() < mult[1].norm()) {
        (Branch::WeakStable, true) | (Branch::WeakUnstable, false) => 0,
        _ => 1,
    };
    let lambda = mult[col].re;
    let alpha = match scale {
        Scale::Fixed(a) if a.is_finite() && a != 0.0 => a,
        Scale::Fixed(a) => return Err(SeparatrixError::Precondition(format!("scale {a} must be finite and nonzero"))),
        Scale::Auto => fit_scale(&map, sol, &diag.p_bar, &mult, col, lambda, d_max)?,
    };
    let w = build(&map, sol, &diag.p_bar, &mult, col, lambda, d_max, alpha)?;
    Ok(SeparatrixParameterization { label: sol.label, branch, eps: sol.eps, lambda, w, alpha, domain: None })
}

/// Real tangent direction of column `col`, normalized to unit max norm.
fn tangent(p_bar: &[CMatrix], col: usize) -> Vec<State> {
    // The column has one global phase because DF and lambda are real.
    let c0 = p_bar[0].column(col);
    let pivot = c0.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
    let unphase = pivot.conj() / pivot.norm();
    let v: Vec<State> = p_bar.iter().map(|p| p.column(col).map(|z| (z * unphase).re)).collect();
    let n = v.iter().map(|x| x.amax()).fold(0.0, f64::max);
    v.into_iter().map(|x| x / n).collect()
}

#[allow(clippy::too_many_arguments)]
fn build<M: SymplecticMap>(
    map: &M,
    sol: &PeriodicOrbitSolution,
    p_bar: &[CMatrix],
    mult: &[Complex64; 4],
    col: usize,
    lambda: f64,
    d_max: usize,
    alpha: f64,
) -> Result<Vec<Vec<State>>, SeparatrixError> {
    let mut w: Vec<Vec<State>> =
        sol.x.iter().zip(tangent(p_bar, col)).map(|(x, t)| vec![*x, t * alpha]).collect();
    // Orders 0 and 1 are only as exact as the orbit solve.
    let lower_tol = (100.0 * sol.tol).max(1e-6);
    for d in 2..=d_max {
        let e_d = order_error(map, &w, lambda, d, lower_tol)?;
        let (w_d, _) = solve_order(&e_d, p_bar, mult, lambda, d)?;
        w.iter_mut().zip(w_d).for_each(|(wk, c)| wk.push(c));
    }
    w.iter_mut().for_each(|wk| wk.truncate(d_max + 1));
    Ok(w)
}

/// Target of `max_k |W_d(k)|` at the final degree, the log-midpoint of `[1e-12, 1e3]`.
const SCALE_TARGET: f64 = 3.162_277_660_168_379_5e-5;

fn fit_scale<M: SymplecticMap>(
    map: &M,
    sol: &PeriodicOrbitSolution,
    p_bar: &[CMatrix],
    mult: &[Complex64; 4],
    col: usize,
    lambda: f64,
    d_max: usize,
) -> Result<f64, SeparatrixError> {
    let d_pre = d_max.min(8);
    if d_pre < 3 {
        return Ok(1.0);
    }
    let w = build(map, sol, p_bar, mult, col, lambda, d_pre, 1.0)?;
    // Least-squares line through log max_k |W_d(k)| for d = 2..=d_pre.
    let pts: Vec<(f64, f64)> = (2..=d_pre)
        .filter_map(|d| {
            let n = w.iter().map(|wk| wk[d].amax()).fold(0.0, f64::max);
            (n > 0.0).then(|| (d as f64, n.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return Ok(1.0);
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let rate = sxy / sxx;
    let intercept = my - rate * mx;
    // log |W_d| ~ intercept + rate d becomes intercept + (rate + log alpha) d.
    let dm = d_max as f64;
    let log_alpha = (SCALE_TARGET.ln() - intercept) / dm - rate;
    Ok(log_alpha.exp())
}

fn probe_ok<M: SymplecticMap>(
    map: &M,
    wp: &SeparatrixParameterization,
    k: usize,
    lo: f64,
    hi: f64,
    n: usize,
    e_tol: f64,
) -> Result<bool, MapError> {
    for i in 1..=n {
        let s = lo + (hi - lo) * i as f64 / n as f64;
        for sign in [1.0, -1.0] {
            let r = wp.residual(map, k, sign * s)?;
            if !(r < e_tol) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Largest radius per `k` on which the invariance residual stays below `e_tol`,
/// found by bisection on `[0, DOMAIN_CEILING]`. Each probe samples
/// `samples` points of `(previous radius, candidate]` on both signs of `s`.
pub fn fundamental_domain<M: SymplecticMap>(
    map: &M,
    wp: &SeparatrixParameterization,
    e_tol: f64,
    samples: usize,
) -> Result<FundamentalDomain, SeparatrixError> {
    if !(e_tol > 0.0) || samples == 0 {
        return Err(SeparatrixError::Precondition("E_tol and the sample count must be positive".into()));
    }
    let map = map.with_eps(wp.eps);
    let radii: Result<Vec<f64>, SeparatrixError> = (0..wp.len())
        .into_par_iter()
        .map(|k| {
            let r0 = wp.residual(&map, k, 0.0)?;
            if !(r0 < e_tol) {
                return Err(SeparatrixError::Inconsistent { k, residual: r0, e_tol });
            }
            if probe_ok(&map, wp, k, 0.0, DOMAIN_CEILING, samples, e_tol)? {
                return Ok(DOMAIN_CEILING);
            }
            let (mut lo, mut hi) = (0.0, DOMAIN_CEILING);
            while hi - lo > 1e-4 * hi {
                let mid = 0.5 * (lo + hi);
                if probe_ok(&map, wp, k, lo, mid, samples, e_tol)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(lo)
        })
        .collect();
    let radii = radii?;
    let min = radii.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(FundamentalDomain { radii, min, e_tol, norm: "max".into(), samples_per_probe: samples })
}

/// One sampled separatrix point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub s: f64,
    pub x: State,
}

/// `n_per_k` evenly spaced parameters in `[-D_k, D_k]` per orbit point, evaluated
/// on the polynomial only. A single sample per point is `s = 0`.
pub fn sample_curves(wp: &SeparatrixParameterization, radii: &[f64], n_per_k: usize) -> Vec<CurvePoint> {
    let mut out = Vec::with_capacity(wp.len() * n_per_k);
    for (k, &r) in radii.iter().enumerate().take(wp.len()) {
        for i in 0..n_per_k {
            let s = if n_per_k == 1 { 0.0 } else { -r + 2.0 * r * i as f64 / (n_per_k - 1) as f64 };
            out.push(CurvePoint { k, s, x: wp.eval(k, s) });
        }
    }
    out
}
