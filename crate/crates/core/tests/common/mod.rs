#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use spo_core::integrate::{flow, IntegratorConfig, StroboscopicMap};
use spo_core::seqsolve::SequenceEquation;
use spo_core::spo::{
    continue_family, initialize, pendulum_libration_momentum, tune_symmetric_orbit, ContinuationConfig, InitConfig,
    PeriodicOrbitSolution, SolveMode,
};
use spo_core::systems::{kepler_radius, ResonanceLabel, SystemModel};
use spo_core::State;

pub const OMEGA_P: f64 = 2.7;

pub fn pendulum_period() -> f64 {
    2.0 * std::f64::consts::PI / OMEGA_P
}

pub fn pendulum_map() -> StroboscopicMap {
    pendulum_map_at(IntegratorConfig::default())
}

/// Tight tolerances for the initial-frame identities: the seed error of the
/// long librations grows with `q` and feeds straight into `E_red`.
pub fn tight_integrator() -> IntegratorConfig {
    IntegratorConfig { abs_tol: 1e-13, rel_tol: 1e-13, ..IntegratorConfig::default() }
}

pub fn pendulum_map_at(cfg: IntegratorConfig) -> StroboscopicMap {
    StroboscopicMap::new(SystemModel::forced_pendulum(OMEGA_P).unwrap(), 0.0, 0.0, cfg).unwrap()
}

/// Point at `frac` of the period along the `1/q` pendulum libration.
pub fn pendulum_seed(q: u32, frac: f64) -> State {
    pendulum_seed_at(q, frac, &IntegratorConfig::default())
}

pub fn pendulum_seed_at(q: u32, frac: f64, cfg: &IntegratorConfig) -> State {
    let sys = SystemModel::forced_pendulum(OMEGA_P).unwrap();
    let t = q as f64 * pendulum_period();
    let py = pendulum_libration_momentum(t).unwrap();
    flow(&sys, 0.0, &State::new(0.0, 0.0, 0.0, py), 0.0, frac * t, cfg).unwrap()
}

pub fn pendulum_init(q: u32, frac: f64) -> PeriodicOrbitSolution {
    pendulum_init_at(q, frac, IntegratorConfig::default())
}

pub fn pendulum_init_at(q: u32, frac: f64, cfg: IntegratorConfig) -> PeriodicOrbitSolution {
    let label = ResonanceLabel::new(1, q).unwrap();
    let seed = pendulum_seed_at(q, frac, &cfg);
    initialize(&pendulum_map_at(cfg), &seed, label, SolveMode::Perturbed, &InitConfig::default()).unwrap()
}

/// The hyperbolic 1/3 orbit continued to `eps`.
pub fn pendulum_hyperbolic(eps: f64, steps: usize) -> Vec<PeriodicOrbitSolution> {
    continue_family(&pendulum_map(), &pendulum_init(3, 0.5), eps, steps, &ContinuationConfig::default()).unwrap()
}

pub const GANYMEDE_MU: f64 = 7.8037e-5;
pub const EUROPA_EPS: f64 = 2.5265e-5;
pub const EUROPA_PERIOD: f64 = 6.1966;

pub fn ganymede_system() -> SystemModel {
    let omega3 = 1.0 + 2.0 * std::f64::consts::PI / EUROPA_PERIOD;
    SystemModel::ccr4bp(GANYMEDE_MU, kepler_radius(GANYMEDE_MU, EUROPA_EPS, omega3), omega3).unwrap()
}

pub fn ganymede_map() -> StroboscopicMap {
    StroboscopicMap::new(ganymede_system(), 0.0, 0.0, IntegratorConfig::default()).unwrap()
}

/// Initial solution of the `p/q` orbit of the 4:3 family, started at `frac` of
/// its period from the symmetric crossing.
pub fn ganymede_init(p: u32, q: u32, x: f64, py: f64, frac: f64) -> PeriodicOrbitSolution {
    let sys = ganymede_system();
    let cfg = IntegratorConfig::default();
    let t = q as f64 / p as f64 * EUROPA_PERIOD;
    let orb = tune_symmetric_orbit(&sys, x, py, 0.5 * t, &cfg).unwrap();
    let x0 = flow(&sys, 0.0, &orb.x0, 0.0, frac * t, &cfg).unwrap();
    initialize(&ganymede_map(), &x0, ResonanceLabel::new(p, q).unwrap(), SolveMode::Perturbed, &InitConfig::default())
        .unwrap()
}

/// Dense solve of `la(k) u(k) - lb(k) u(k+1 mod q) = b(k)`.
pub fn dense_cyclic_solve(eq: &SequenceEquation) -> Vec<Complex64> {
    let q = eq.q();
    let mut a = DMatrix::<Complex64>::zeros(q, q);
    for k in 0..q {
        a[(k, k)] += eq.la[k];
        a[(k, (k + 1) % q)] -= eq.lb[k];
    }
    let b = DVector::from_vec(eq.b.clone());
    a.lu().solve(&b).expect("dense cyclic system is singular").iter().copied().collect()
}

pub fn max_rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|x| x.norm()).fold(1e-300, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}
