//! Adaptive propagation of states, variational equations and jets, and the
//! stroboscopic map built on top of them.

mod dop853;

pub use dop853::integrate;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::systems::{Dual, SystemModel};
use crate::taylor::{SeriesVector, TruncatedSeries};
use crate::State;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error("step limit reached after {steps} steps at t = {t}")]
    StepLimit { t: f64, steps: usize },
    #[error("non-finite state after last good time t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid integrator configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
    /// First trial step; zero selects it automatically.
    pub initial_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_steps: 100_000, initial_step: 0.0 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegrationError> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(IntegrationError::Config("tolerances must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(IntegrationError::Config("max_steps must be positive".into()));
        }
        if !(self.initial_step >= 0.0) {
            return Err(IntegrationError::Config("initial_step must be non-negative".into()));
        }
        Ok(())
    }
}

/// Advances `x0` by time `t`; the phase starts at `theta0` and moves at the system rate.
pub fn flow(
    system: &SystemModel,
    eps: f64,
    x0: &State,
    theta0: f64,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<State, IntegrationError> {
    cfg.validate()?;
    let rate = system.theta_rate();
    let mut y = [x0[0], x0[1], x0[2], x0[3], theta0];
    integrate(
        |_, y, dy| {
            let f = system.field(&[y[0], y[1], y[2], y[3]], &y[4], eps);
            dy[..4].copy_from_slice(&f);
            dy[4] = rate;
        },
        0.0,
        t,
        &mut y,
        cfg,
    )?;
    Ok(Vector4::new(y[0], y[1], y[2], y[3]))
}

/// Flow together with its Jacobian, from the joint state and variational system.
pub fn flow_with_variational(
    system: &SystemModel,
    eps: f64,
    x0: &State,
    theta0: f64,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<(State, Matrix4<f64>), IntegrationError> {
    cfg.validate()?;
    let rate = system.theta_rate();
    let mut y = vec![0.0; 21];
    y[..4].copy_from_slice(x0.as_slice());
    y[4] = theta0;
    for i in 0..4 {
        y[5 + 4 * i + i] = 1.0;
    }
    integrate(
        |_, y, dy| {
            let s: [Dual<4>; 4] = std::array::from_fn(|i| Dual::variable(y[i], i));
            let f = system.field(&s, &Dual::constant(y[4]), eps);
            for i in 0..4 {
                dy[i] = f[i].v;
            }
            dy[4] = rate;
            // Column-major Phi; dPhi = Df Phi.
            for c in 0..4 {
                for r in 0..4 {
                    let mut acc = 0.0;
                    for m in 0..4 {
                        acc += f[r].d[m] * y[5 + 4 * c + m];
                    }
                    dy[5 + 4 * c + r] = acc;
                }
            }
        },
        0.0,
        t,
        &mut y,
        cfg,
    )?;
    let x = Vector4::new(y[0], y[1], y[2], y[3]);
    let phi = Matrix4::from_column_slice(&y[5..21]);
    Ok((x, phi))
}

/// Transports a jet through the flow, coefficient by coefficient.
pub fn jet_flow(
    system: &SystemModel,
    eps: f64,
    v0: &SeriesVector,
    theta0: f64,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<SeriesVector, IntegrationError> {
    cfg.validate()?;
    let d = v0[0].degree();
    if v0.iter().any(|c| c.degree() != d) {
        return Err(IntegrationError::Config("jet components must share a degree".into()));
    }
    let m = d + 1;
    let rate = system.theta_rate();
    let mut y = vec![0.0; 4 * m + 1];
    for i in 0..4 {
        y[i * m..(i + 1) * m].copy_from_slice(v0[i].coeffs());
    }
    y[4 * m] = theta0;
    integrate(
        |_, y, dy| {
            let v: SeriesVector =
                std::array::from_fn(|i| TruncatedSeries::new(y[i * m..(i + 1) * m].to_vec()));
            let f = system.rhs_jet(&v, y[4 * m], eps);
            for i in 0..4 {
                dy[i * m..(i + 1) * m].copy_from_slice(f[i].coeffs());
            }
            dy[4 * m] = rate;
        },
        0.0,
        t,
        &mut y,
        cfg,
    )?;
    Ok(std::array::from_fn(|i| TruncatedSeries::new(y[i * m..(i + 1) * m].to_vec())))
}

/// Time-`T_p` map of a forced system on the fixed section `theta = theta0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StroboscopicMap {
    pub system: SystemModel,
    pub eps: f64,
    pub period: f64,
    pub theta0: f64,
    pub integrator: IntegratorConfig,
}

impl StroboscopicMap {
    pub fn new(
        system: SystemModel,
        eps: f64,
        theta0: f64,
        integrator: IntegratorConfig,
    ) -> Result<Self, IntegrationError> {
        integrator.validate()?;
        let period = system.perturbation_period().ok_or_else(|| {
            IntegrationError::Config(format!("{} has no perturbation period", system.name()))
        })?;
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(IntegrationError::Config(format!("eps = {eps} must be non-negative")));
        }
        let theta0 = theta0.rem_euclid(2.0 * std::f64::consts::PI);
        Ok(Self { system, eps, period, theta0, integrator })
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..*self }
    }

    pub fn strobe(&self, x: &State) -> Result<State, IntegrationError> {
        flow(&self.system, self.eps, x, self.theta0, self.period, &self.integrator)
    }

    pub fn strobe_jacobian(&self, x: &State) -> Result<(State, Matrix4<f64>), IntegrationError> {
        flow_with_variational(&self.system, self.eps, x, self.theta0, self.period, &self.integrator)
    }

    pub fn strobe_jet(&self, v: &SeriesVector) -> Result<SeriesVector, IntegrationError> {
        jet_flow(&self.system, self.eps, v, self.theta0, self.period, &self.integrator)
    }
}
