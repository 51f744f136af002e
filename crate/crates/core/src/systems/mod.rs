//! Concrete Hamiltonian models: the planar circular restricted three-body
//! problem, its concentric four-body perturbation, and a forced pendulum pair
//! used as a cheap test vehicle.

mod scalar;

pub use scalar::{Dual, PhaseScalar};

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taylor::{SeriesVector, TruncatedSeries};
use crate::State;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("parameter out of range: {0}")]
    Parameter(String),
}

/// Rotation number label `p/q` of a resonance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonanceLabel {
    pub p: u32,
    pub q: u32,
}

impl ResonanceLabel {
    pub fn new(p: u32, q: u32) -> Result<Self, SystemError> {
        if p == 0 || q == 0 || p >= q || gcd(p, q) != 1 {
            return Err(SystemError::Parameter(format!(
                "resonance {p}/{q} must be coprime with 0 < p < q"
            )));
        }
        Ok(Self { p, q })
    }

    /// Angle advanced per iterate, `2 pi p / q`.
    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.p as f64 / self.q as f64
    }
}

impl std::fmt::Display for ResonanceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Angular velocity of a body on a circular orbit of radius `r13` about the
/// primary, in units where the primary pair has unit total mass and separation.
pub fn kepler_omega(mu: f64, eps: f64, r13: f64) -> f64 {
    ((1.0 - mu + eps) / r13.powi(3)).sqrt()
}

/// Inverse of [`kepler_omega`].
pub fn kepler_radius(mu: f64, eps: f64, omega3: f64) -> f64 {
    ((1.0 - mu + eps) / (omega3 * omega3)).cbrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemModel {
    Pcr3bp { mu: f64 },
    Ccr4bp { mu: f64, r13: f64, omega3: f64 },
    ForcedPendulum { omega_p: f64 },
}

fn check_mu(mu: f64) -> Result<(), SystemError> {
    if mu > 0.0 && mu < 0.5 {
        Ok(())
    } else {
        Err(SystemError::Parameter(format!("mass ratio {mu} not in (0, 1/2)")))
    }
}

impl SystemModel {
    pub fn pcr3bp(mu: f64) -> Result<Self, SystemError> {
        check_mu(mu)?;
        Ok(Self::Pcr3bp { mu })
    }

    pub fn ccr4bp(mu: f64, r13: f64, omega3: f64) -> Result<Self, SystemError> {
        check_mu(mu)?;
        if !(r13 > 0.0 && r13.is_finite()) {
            return Err(SystemError::Parameter(format!("r13 = {r13} must be positive")));
        }
        if !(omega3.is_finite() && omega3 != 1.0) {
            return Err(SystemError::Parameter(format!(
                "omega3 = {omega3} must be finite and differ from 1"
            )));
        }
        Ok(Self::Ccr4bp { mu, r13, omega3 })
    }

    /// Forced pendulum pair with perturbation frequency `omega_p`.
    pub fn forced_pendulum(omega_p: f64) -> Result<Self, SystemError> {
        if !(omega_p.is_finite() && omega_p != 0.0) {
            return Err(SystemError::Parameter(format!("omega_p = {omega_p} must be nonzero")));
        }
        Ok(Self::ForcedPendulum { omega_p })
    }

    /// Forced pendulum with the default frequency used for the 1/3 test resonance.
    pub fn forced_pendulum_test() -> Self {
        Self::ForcedPendulum { omega_p: 2.7 }
    }

    /// Re-validates parameters, e.g. after deserialization.
    pub fn validate(&self) -> Result<(), SystemError> {
        match *self {
            Self::Pcr3bp { mu } => Self::pcr3bp(mu).map(|_| ()),
            Self::Ccr4bp { mu, r13, omega3 } => Self::ccr4bp(mu, r13, omega3).map(|_| ()),
            Self::ForcedPendulum { omega_p } => Self::forced_pendulum(omega_p).map(|_| ()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Pcr3bp { .. } => "pcr3bp",
            Self::Ccr4bp { .. } => "ccr4bp",
            Self::ForcedPendulum { .. } => "forced_pendulum",
        }
    }

    /// Angular rate of the perturbation phase. Zero for the autonomous model.
    pub fn theta_rate(&self) -> f64 {
        match *self {
            Self::Pcr3bp { .. } => 0.0,
            Self::Ccr4bp { omega3, .. } => omega3 - 1.0,
            Self::ForcedPendulum { omega_p } => omega_p,
        }
    }

    /// Perturbation period `2 pi / |Omega_p|`, if the model is forced.
    pub fn perturbation_period(&self) -> Option<f64> {
        let w = self.theta_rate();
        (w != 0.0).then(|| 2.0 * std::f64::consts::PI / w.abs())
    }

    /// Vector field evaluated with any [`PhaseScalar`]; state order is `(x, y, px, py)`.
    pub fn field<S: PhaseScalar>(&self, s: &[S; 4], theta: &S, eps: f64) -> [S; 4] {
        match *self {
            Self::Pcr3bp { mu } => pcr3bp_field(mu, s),
            Self::Ccr4bp { mu, r13, .. } => {
                let mut f = pcr3bp_field(mu, s);
                if eps != 0.0 {
                    let [dpx, dpy] = ccr4bp_forcing(mu, r13, s, theta);
                    f[2] = f[2].clone() - dpx * eps;
                    f[3] = f[3].clone() - dpy * eps;
                }
                f
            }
            Self::ForcedPendulum { .. } => {
                let [x, y, px, py] = s.clone();
                let (sx, _) = x.sin_cos();
                let (sy, _) = y.sin_cos();
                let mut pyd = -sy;
                if eps != 0.0 {
                    let (sf, _) = (y - theta.clone()).sin_cos();
                    pyd = pyd + sf * eps;
                }
                [px, py, sx, pyd]
            }
        }
    }

    pub fn rhs(&self, x: &State, theta: f64, eps: f64) -> State {
        let f = self.field(&[x[0], x[1], x[2], x[3]], &theta, eps);
        Vector4::from(f)
    }

    /// Jacobian of the vector field with respect to the state, and its
    /// derivative with respect to the phase.
    pub fn rhs_jacobian(&self, x: &State, theta: f64, eps: f64) -> (Matrix4<f64>, State) {
        let s: [Dual<5>; 4] = std::array::from_fn(|i| Dual::variable(x[i], i));
        let f = self.field(&s, &Dual::variable(theta, 4), eps);
        let jac = Matrix4::from_fn(|i, j| f[i].d[j]);
        let dtheta = Vector4::from_fn(|i, _| f[i].d[4]);
        (jac, dtheta)
    }

    /// Series-valued vector field used for jet transport.
    pub fn rhs_jet(&self, v: &SeriesVector, theta: f64, eps: f64) -> SeriesVector {
        let th = TruncatedSeries::constant(theta, v[0].degree());
        self.field(v, &th, eps)
    }

    pub fn hamiltonian(&self, x: &State, theta: f64, eps: f64) -> f64 {
        let (qx, qy, px, py) = (x[0], x[1], x[2], x[3]);
        match *self {
            Self::Pcr3bp { mu } => pcr3bp_energy(mu, x),
            Self::Ccr4bp { mu, r13, .. } => {
                let h0 = pcr3bp_energy(mu, x);
                if eps == 0.0 {
                    return h0;
                }
                let (s, c) = theta.sin_cos();
                let (x3, y3) = (-mu + r13 * c, r13 * s);
                let r3 = ((qx - x3).powi(2) + (qy - y3).powi(2)).sqrt();
                h0 + eps * (-1.0 / r3 + (qx * c + qy * s) / (r13 * r13))
            }
            Self::ForcedPendulum { .. } => {
                0.5 * px * px + qx.cos() + 0.5 * py * py - qy.cos() + eps * (qy - theta).cos()
            }
        }
    }
}

fn pcr3bp_energy(mu: f64, x: &State) -> f64 {
    let (qx, qy, px, py) = (x[0], x[1], x[2], x[3]);
    let r1 = ((qx + mu).powi(2) + qy * qy).sqrt();
    let r2 = ((qx - 1.0 + mu).powi(2) + qy * qy).sqrt();
    0.5 * (px * px + py * py) + px * qy - py * qx - (1.0 - mu) / r1 - mu / r2
}

fn pcr3bp_field<S: PhaseScalar>(mu: f64, s: &[S; 4]) -> [S; 4] {
    let [x, y, px, py] = s.clone();
    let y2 = y.clone() * y.clone();
    let d1 = x.clone() + mu;
    let d2 = x.clone() + (mu - 1.0);
    let r1m3 = (d1.clone() * d1.clone() + y2.clone()).powf(-1.5) * (1.0 - mu);
    let r2m3 = (d2.clone() * d2.clone() + y2).powf(-1.5) * mu;
    let xd = px.clone() + y.clone();
    let yd = py.clone() - x;
    let pxd = py - d1 * r1m3.clone() - d2 * r2m3.clone();
    let pyd = -px - y * (r1m3 + r2m3);
    [xd, yd, pxd, pyd]
}

/// Gradient of `H_1 / eps` with respect to `(x, y)`.
fn ccr4bp_forcing<S: PhaseScalar>(mu: f64, r13: f64, s: &[S; 4], theta: &S) -> [S; 2] {
    let (sn, cs) = theta.sin_cos();
    let dx = s[0].clone() - (cs.clone() * r13 + (-mu));
    let dy = s[1].clone() - sn.clone() * r13;
    let r3m3 = (dx.clone() * dx.clone() + dy.clone() * dy.clone()).powf(-1.5);
    let inv = 1.0 / (r13 * r13);
    [dx * r3m3.clone() + cs * inv, dy * r3m3 + sn * inv]
}
