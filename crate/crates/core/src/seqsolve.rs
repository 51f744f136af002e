//! Scalar cyclic sequence equations `la(k) u(k) - lb(k) u(k+1 mod q) = b(k)`.
//!
//! Every linear correction in the orbit solver and the separatrix recursion
//! reduces to equations of this form. Strongly hyperbolic ratios are solved by
//! fixed-point sweeps in the stable direction, unit-modulus and near-unit
//! ratios by the closed formula for `u(0)` followed by forward recursion.

use nalgebra::Vector4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeqSolveError {
    #[error("sequence lengths differ: {0:?}")]
    LengthMismatch([usize; 3]),
    #[error("empty sequence")]
    Empty,
    #[error("zero multiplier at k = {0}")]
    ZeroMultiplier(usize),
    #[error("ratios |la/lb| straddle 1 (min {min}, max {max})")]
    MixedRegime { min: f64, max: f64 },
    #[error("fixed-point iteration stalled after {sweeps} sweeps (contraction factor {factor})")]
    NotConverged { sweeps: usize, factor: f64 },
    #[error("degenerate resonance: product of ratios {product} too close to 1")]
    Resonance { product: f64 },
    #[error("cohomological equation needs a zero-sum right-hand side; sum is {sum}")]
    NonZeroSum { sum: f64 },
    #[error("non-positive multiplier {value} at k = {k}")]
    NonPositive { k: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeqSolveConfig {
    /// Stop when successive sweeps differ by less than this, relative to `max(1, |u|)`.
    pub step_tol: f64,
    pub max_sweeps: usize,
    /// `| |la/lb| - 1 |` below this counts as unit modulus.
    pub unit_tol: f64,
    /// Hyperbolic equations whose ratio product `R` has `|ln R|` below this
    /// are solved by the closed formula instead of slow sweeps.
    pub direct_band: f64,
    /// Accept ratios that straddle 1 and solve them by the closed formula, as
    /// long as the ratio product stays away from 1.
    pub allow_mixed: bool,
}

impl Default for SeqSolveConfig {
    fn default() -> Self {
        Self { step_tol: 1e-14, max_sweeps: 10_000, unit_tol: 1e-12, direct_band: 1.0, allow_mixed: false }
    }
}

/// Tolerance on `|sum b|` for the cohomological equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SumTolerance {
    /// `1e-10 q max(1, max|b|)`.
    Default,
    Absolute(f64),
    /// Solve regardless of the sum; the wraparound relation then fails by the sum.
    Unchecked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceEquation {
    pub la: Vec<Complex64>,
    pub lb: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Contracting,
    Expanding,
    UnitModulus,
    Cohomological,
    /// Hyperbolic but with ratio product within the direct band of 1.
    NearUnit,
    /// Ratios on both sides of 1; only produced when mixed input is allowed.
    Mixed,
}

impl SequenceEquation {
    pub fn new(
        la: Vec<Complex64>,
        lb: Vec<Complex64>,
        b: Vec<Complex64>,
    ) -> Result<Self, SeqSolveError> {
        if la.len() != lb.len() || la.len() != b.len() {
            return Err(SeqSolveError::LengthMismatch([la.len(), lb.len(), b.len()]));
        }
        if la.is_empty() {
            return Err(SeqSolveError::Empty);
        }
        if let Some(k) = lb.iter().position(|l| l.norm() == 0.0) {
            return Err(SeqSolveError::ZeroMultiplier(k));
        }
        Ok(Self { la, lb, b })
    }

    /// Constant multipliers.
    pub fn constant(la: Complex64, lb: Complex64, b: Vec<Complex64>) -> Result<Self, SeqSolveError> {
        let q = b.len();
        Self::new(vec![la; q], vec![lb; q], b)
    }

    pub fn real(la: &[f64], lb: &[f64], b: &[f64]) -> Result<Self, SeqSolveError> {
        let c = |v: &[f64]| v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(c(la), c(lb), c(b))
    }

    pub fn q(&self) -> usize {
        self.b.len()
    }

    fn is_constant(&self) -> bool {
        self.la.iter().all(|&l| l == self.la[0]) && self.lb.iter().all(|&l| l == self.lb[0])
    }

    /// `max_k |la u - lb u(+) - b|`.
    pub fn residual(&self, u: &[Complex64]) -> f64 {
        let q = self.q();
        (0..q)
            .map(|k| (self.la[k] * u[k] - self.lb[k] * u[(k + 1) % q] - self.b[k]).norm())
            .fold(0.0, f64::max)
    }

    fn b_scale(&self) -> f64 {
        self.b.iter().map(|x| x.norm()).fold(1.0, f64::max)
    }

    pub fn classify(&self, cfg: &SeqSolveConfig) -> Result<Regime, SeqSolveError> {
        let ratios: Vec<f64> = self.la.iter().zip(&self.lb).map(|(a, b)| (a / b).norm()).collect();
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let max = ratios.iter().copied().fold(0.0, f64::max);
        let log_product: f64 = ratios.iter().map(|r| r.ln()).sum();
        if (min - 1.0).abs() <= cfg.unit_tol && (max - 1.0).abs() <= cfg.unit_tol {
            if self.is_constant() && (self.la[0] - self.lb[0]).norm() <= cfg.unit_tol * self.la[0].norm() {
                return Ok(Regime::Cohomological);
            }
            if self.is_constant() {
                return Ok(Regime::UnitModulus);
            }
            return Ok(Regime::NearUnit);
        }
        if max < 1.0 || min > 1.0 {
            if log_product.abs() < cfg.direct_band {
                return Ok(Regime::NearUnit);
            }
            return Ok(if max < 1.0 { Regime::Contracting } else { Regime::Expanding });
        }
        if cfg.allow_mixed {
            return Ok(Regime::Mixed);
        }
        Err(SeqSolveError::MixedRegime { min, max })
    }
}

/// Iterates and successive-difference history of a fixed-point solve.
#[derive(Debug, Clone)]
pub struct FixedPointReport {
    pub u: Vec<Complex64>,
    pub sweeps: usize,
    pub diffs: Vec<f64>,
    pub factor: f64,
}

/// Fixed-point solve for uniformly contracting or uniformly expanding ratios.
///
/// Contracting equations use `u(k) = [la(k-1) u(k-1) - b(k-1)] / lb(k-1)`,
/// expanding ones `u(k) = [b(k) + lb(k) u(k+1)] / la(k)`; each sweep updates in
/// place along the direction of the recursion, starting from `u = 0`.
pub fn fixed_point(eq: &SequenceEquation, cfg: &SeqSolveConfig) -> Result<FixedPointReport, SeqSolveError> {
    let q = eq.q();
    let ratios: Vec<f64> = eq.la.iter().zip(&eq.lb).map(|(a, b)| (a / b).norm()).collect();
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let contracting = if max < 1.0 {
        true
    } else if min > 1.0 {
        false
    } else {
        return Err(SeqSolveError::MixedRegime { min, max });
    };
    if !contracting {
        if let Some(k) = eq.la.iter().position(|l| l.norm() == 0.0) {
            return Err(SeqSolveError::ZeroMultiplier(k));
        }
    }
    let factor = if contracting { max } else { 1.0 / min };
    let mut u = vec![Complex64::new(0.0, 0.0); q];
    let mut diffs = Vec::new();
    for sweep in 1..=cfg.max_sweeps {
        let mut diff: f64 = 0.0;
        if contracting {
            for step in 1..=q {
                let k = step % q;
                let km = step - 1;
                let new = (eq.la[km] * u[km] - eq.b[km]) / eq.lb[km];
                diff = diff.max((new - u[k]).norm());
                u[k] = new;
            }
        } else {
            for step in (0..q).rev() {
                let new = (eq.b[step] + eq.lb[step] * u[(step + 1) % q]) / eq.la[step];
                diff = diff.max((new - u[step]).norm());
                u[step] = new;
            }
        }
        diffs.push(diff);
        let unorm = u.iter().map(|x| x.norm()).fold(1.0, f64::max);
        if diff < cfg.step_tol * unorm {
            return Ok(FixedPointReport { u, sweeps: sweep, diffs, factor });
        }
    }
    Err(SeqSolveError::NotConverged { sweeps: cfg.max_sweeps, factor })
}

pub fn solve_contracting(eq: &SequenceEquation, cfg: &SeqSolveConfig) -> Result<Vec<Complex64>, SeqSolveError> {
    fixed_point(eq, cfg).map(|r| r.u)
}

/// Closed formula for `u(0)` with constant unit-modulus multipliers, then forward recursion.
pub fn solve_unit_modulus(eq: &SequenceEquation, cfg: &SeqSolveConfig) -> Result<Vec<Complex64>, SeqSolveError> {
    let q = eq.q();
    let (la, lb) = (eq.la[0], eq.lb[0]);
    let r = lb / la;
    let rq = r.powu(q as u32);
    if (Complex64::new(1.0, 0.0) - rq).norm() < 1e-13 {
        return Err(SeqSolveError::Resonance { product: rq.norm() });
    }
    let _ = cfg;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut ri = Complex64::new(1.0, 0.0);
    for i in 0..q {
        acc += ri * eq.b[i];
        ri *= r;
    }
    let mut u = vec![Complex64::new(0.0, 0.0); q];
    u[0] = acc / (la * (Complex64::new(1.0, 0.0) - rq));
    for k in 0..q - 1 {
        u[k + 1] = (la * u[k] - eq.b[k]) / lb;
    }
    Ok(u)
}

/// Closed form for any multipliers: `u` is written as an affine function of
/// one end value, which the wraparound then fixes. The recursion runs forward
/// when the ratio product is below one and backward otherwise, so errors are
/// damped over the full cycle.
pub fn solve_direct(eq: &SequenceEquation) -> Result<Vec<Complex64>, SeqSolveError> {
    let q = eq.q();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let log_product: f64 = eq.la.iter().zip(&eq.lb).map(|(a, b)| (a / b).norm().ln()).sum();
    let mut u = vec![zero; q];
    if log_product <= 0.0 {
        let (mut alpha, mut beta) = (one, zero);
        for k in 0..q {
            alpha = eq.la[k] * alpha / eq.lb[k];
            beta = (eq.la[k] * beta - eq.b[k]) / eq.lb[k];
        }
        if (one - alpha).norm() < 1e-13 {
            return Err(SeqSolveError::Resonance { product: alpha.norm() });
        }
        u[0] = beta / (one - alpha);
        for k in 0..q - 1 {
            u[k + 1] = (eq.la[k] * u[k] - eq.b[k]) / eq.lb[k];
        }
    } else {
        if let Some(k) = eq.la.iter().position(|l| l.norm() == 0.0) {
            return Err(SeqSolveError::ZeroMultiplier(k));
        }
        // u(k) = gamma u(q) + delta, downward from u(q) = u(0).
        let (mut gamma, mut delta) = (one, zero);
        for k in (0..q).rev() {
            gamma = eq.lb[k] * gamma / eq.la[k];
            delta = (eq.b[k] + eq.lb[k] * delta) / eq.la[k];
        }
        if (one - gamma).norm() < 1e-13 {
            return Err(SeqSolveError::Resonance { product: 1.0 / gamma.norm() });
        }
        u[0] = delta / (one - gamma);
        let mut next = u[0];
        for k in (1..q).rev() {
            u[k] = (eq.b[k] + eq.lb[k] * next) / eq.la[k];
            next = u[k];
        }
    }
    Ok(u)
}

/// `u(k) - u(k+1 mod q) = b(k)` with `u(0) = 0`.
pub fn solve_cohomological(b: &[Complex64], tol: SumTolerance) -> Result<Vec<Complex64>, SeqSolveError> {
    let q = b.len();
    if q == 0 {
        return Err(SeqSolveError::Empty);
    }
    let sum: Complex64 = b.iter().sum();
    let limit = match tol {
        SumTolerance::Default => 1e-10 * q as f64 * b.iter().map(|x| x.norm()).fold(1.0, f64::max),
        SumTolerance::Absolute(t) => t,
        SumTolerance::Unchecked => f64::INFINITY,
    };
    if sum.norm() >= limit {
        return Err(SeqSolveError::NonZeroSum { sum: sum.norm() });
    }
    let mut u = vec![Complex64::new(0.0, 0.0); q];
    for k in 0..q - 1 {
        u[k + 1] = u[k] - b[k];
    }
    Ok(u)
}

/// Real-valued convenience wrapper of [`solve_cohomological`].
pub fn solve_cohomological_real(b: &[f64], tol: SumTolerance) -> Result<Vec<f64>, SeqSolveError> {
    let c: Vec<Complex64> = b.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    Ok(solve_cohomological(&c, tol)?.into_iter().map(|z| z.re).collect())
}

/// Classifies the equation and dispatches to the matching solver.
pub fn solve_auto(eq: &SequenceEquation, cfg: &SeqSolveConfig) -> Result<Vec<Complex64>, SeqSolveError> {
    match eq.classify(cfg)? {
        Regime::Contracting | Regime::Expanding => solve_contracting(eq, cfg),
        Regime::UnitModulus => solve_unit_modulus(eq, cfg),
        Regime::NearUnit | Regime::Mixed => solve_direct(eq),
        Regime::Cohomological => {
            let scaled: Vec<Complex64> = eq.b.iter().map(|b| b / eq.la[0]).collect();
            let tol = 1e-10 * eq.q() as f64 * eq.b_scale() / eq.la[0].norm();
            solve_cohomological(&scaled, SumTolerance::Absolute(tol))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleResult {
    pub a_s: Vec<f64>,
    pub a_u: Vec<f64>,
    pub lambda_s: f64,
    pub lambda_u: f64,
}

/// Scales `a` with `a(k) lambda(k) = a(k+1) lambda_bar`, `lambda_bar` the geometric mean.
pub fn constant_scales(lambda: &[f64]) -> Result<(Vec<f64>, f64), SeqSolveError> {
    if let Some(k) = lambda.iter().position(|&l| !(l > 0.0)) {
        return Err(SeqSolveError::NonPositive { k, value: lambda[k] });
    }
    let logs: Vec<f64> = lambda.iter().map(|l| l.ln()).collect();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let b: Vec<f64> = logs.iter().map(|l| -(l - mean)).collect();
    let u = solve_cohomological_real(&b, SumTolerance::Unchecked)?;
    Ok((u.into_iter().map(f64::exp).collect(), mean.exp()))
}

/// Rescaled stable and unstable sequences with their constant multipliers.
pub type Rescaled = (Vec<Vector4<f64>>, Vec<Vector4<f64>>, RescaleResult);

/// Rescales the stable and unstable vector sequences so their multipliers become constant.
pub fn rescale_constant(
    v_s: &[Vector4<f64>],
    v_u: &[Vector4<f64>],
    lambda_s: &[f64],
    lambda_u: &[f64],
) -> Result<Rescaled, SeqSolveError> {
    let (a_s, ls) = constant_scales(lambda_s)?;
    let (a_u, lu) = constant_scales(lambda_u)?;
    let vs = v_s.iter().zip(&a_s).map(|(v, a)| v * *a).collect();
    let vu = v_u.iter().zip(&a_u).map(|(v, a)| v * *a).collect();
    Ok((vs, vu, RescaleResult { a_s, a_u, lambda_s: ls, lambda_u: lu }))
}
