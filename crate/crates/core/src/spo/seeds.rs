//! Seed orbits of the unperturbed flow: pendulum librations with a prescribed
//! period and time-reversal symmetric orbits of the three-body problem.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::SpoError;
use crate::integrate::{flow, flow_with_variational, IntegratorConfig};
use crate::map::MapError;
use crate::systems::SystemModel;
use crate::State;

fn agm(mut a: f64, mut b: f64) -> f64 {
    while (a - b).abs() > 1e-16 * a {
        let (an, bn) = (0.5 * (a + b), (a * b).sqrt());
        if an == a && bn == b {
            break;
        }
        a = an;
        b = bn;
    }
    a
}

/// Complete elliptic integral of the first kind with modulus `k`.
pub fn elliptic_k(k: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 / agm(1.0, (1.0 - k * k).sqrt())
}

/// Momentum `p_y` at `y = 0` of the `y`-pendulum libration (`H = p^2/2 - cos y`) with the given period.
///
/// The period is `4 K(k)` with `p_y = 2k`; it ranges over `(2 pi, inf)`.
pub fn pendulum_libration_momentum(period: f64) -> Result<f64, SpoError> {
    if !(period > 2.0 * std::f64::consts::PI) || !period.is_finite() {
        return Err(SpoError::Precondition(format!("libration period {period} must exceed 2 pi")));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if 4.0 * elliptic_k(mid) < period {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(2.0 * 0.5 * (lo + hi))
}

/// Return time of the unperturbed flow to `x0`, refined from `guess` by
/// minimizing the distance to `x0` along the orbit.
pub fn estimate_period(
    system: &SystemModel,
    x0: &State,
    guess: f64,
    cfg: &IntegratorConfig,
) -> Result<f64, MapError> {
    let mut t = guess;
    for _ in 0..30 {
        let y = flow(system, 0.0, x0, 0.0, t, cfg)?;
        let f = system.rhs(&y, 0.0, 0.0);
        let dt = (y - x0).dot(&f) / f.norm_squared();
        t -= dt;
        if dt.abs() < 1e-14 * t.abs() {
            break;
        }
    }
    Ok(t)
}

/// A time-reversal symmetric orbit `(x, 0, 0, p_y)` that crosses `y = 0`
/// perpendicularly again after half its period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricOrbit {
    pub x0: State,
    pub period: f64,
    /// `max(|y|, |p_x|)` at the half period.
    pub residual: f64,
}

/// Newton correction of `(x, p_y)` so the orbit has the prescribed period.
pub fn tune_symmetric_orbit(
    system: &SystemModel,
    x: f64,
    py: f64,
    half_period: f64,
    cfg: &IntegratorConfig,
) -> Result<SymmetricOrbit, SpoError> {
    let mut u = Vector2::new(x, py);
    let mut residual = f64::INFINITY;
    for _ in 0..40 {
        let x0 = State::new(u[0], 0.0, 0.0, u[1]);
        let (y, phi) = flow_with_variational(system, 0.0, &x0, 0.0, half_period, cfg).map_err(MapError::from)?;
        let g = Vector2::new(y[1], y[2]);
        residual = g.amax();
        if residual < 1e-13 {
            break;
        }
        let jac = Matrix2::new(phi[(1, 0)], phi[(1, 3)], phi[(2, 0)], phi[(2, 3)]);
        let du = jac
            .lu()
            .solve(&g)
            .ok_or_else(|| SpoError::Precondition("symmetric shooting Jacobian is singular".into()))?;
        u -= du;
        if !u.iter().all(|v| v.is_finite()) {
            return Err(SpoError::Precondition("symmetric shooting diverged".into()));
        }
    }
    if !(residual < 1e-10) {
        return Err(SpoError::Precondition(format!("symmetric shooting stalled at residual {residual:e}")));
    }
    Ok(SymmetricOrbit { x0: State::new(u[0], 0.0, 0.0, u[1]), period: 2.0 * half_period, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn libration_period_round_trip() {
        let t = 3.0 * 2.0 * std::f64::consts::PI / 2.7;
        let p = pendulum_libration_momentum(t).unwrap();
        assert!((4.0 * elliptic_k(p / 2.0) - t).abs() < 1e-10);
        assert!(pendulum_libration_momentum(6.0).is_err());
    }
}
