//! The map abstraction consumed by the orbit solver and the separatrix builder.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrate::{IntegrationError, StroboscopicMap};
use crate::systems::{Dual, PhaseScalar};
use crate::taylor::{SeriesVector, TruncatedSeries};
use crate::State;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error("map evaluation produced a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Stroboscopic,
    Explicit,
}

/// A one-parameter family member `F_eps` of symplectic maps of the plane pair.
pub trait SymplecticMap: Sync {
    fn eps(&self) -> f64;
    fn with_eps(&self, eps: f64) -> Self
    where
        Self: Sized;
    fn kind(&self) -> MapKind;
    fn apply(&self, x: &State) -> Result<State, MapError>;
    fn apply_jacobian(&self, x: &State) -> Result<(State, Matrix4<f64>), MapError>;
    /// Image of a jet; coefficients above the input degree are discarded.
    fn apply_jet(&self, v: &SeriesVector) -> Result<SeriesVector, MapError>;
}

impl SymplecticMap for StroboscopicMap {
    fn eps(&self) -> f64 {
        self.eps
    }
    fn with_eps(&self, eps: f64) -> Self {
        StroboscopicMap::with_eps(self, eps)
    }
    fn kind(&self) -> MapKind {
        MapKind::Stroboscopic
    }
    fn apply(&self, x: &State) -> Result<State, MapError> {
        Ok(self.strobe(x)?)
    }
    fn apply_jacobian(&self, x: &State) -> Result<(State, Matrix4<f64>), MapError> {
        Ok(self.strobe_jacobian(x)?)
    }
    fn apply_jet(&self, v: &SeriesVector) -> Result<SeriesVector, MapError> {
        Ok(self.strobe_jet(v)?)
    }
}

/// `x -> M x`, independent of `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMap {
    pub matrix: Matrix4<f64>,
    pub eps: f64,
}

impl LinearMap {
    pub fn new(matrix: Matrix4<f64>) -> Self {
        Self { matrix, eps: 0.0 }
    }
}

impl SymplecticMap for LinearMap {
    fn eps(&self) -> f64 {
        self.eps
    }
    fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..*self }
    }
    fn kind(&self) -> MapKind {
        MapKind::Explicit
    }
    fn apply(&self, x: &State) -> Result<State, MapError> {
        Ok(self.matrix * x)
    }
    fn apply_jacobian(&self, x: &State) -> Result<(State, Matrix4<f64>), MapError> {
        Ok((self.matrix * x, self.matrix))
    }
    fn apply_jet(&self, v: &SeriesVector) -> Result<SeriesVector, MapError> {
        let d = v[0].degree();
        Ok(std::array::from_fn(|i| {
            (0..4).fold(TruncatedSeries::zero(d), |acc, j| acc + v[j].scale(self.matrix[(i, j)]))
        }))
    }
}

/// Kick-drift map `p' = p - grad V(q)`, `q' = q + p'` with the polynomial potential
/// `V = -a x^2/2 - b y^2/2 - c x^2 y^2/2 - e y^3/3 - eps x y`.
///
/// For `a, b > 0` the origin is a fixed point, the plane `x = px = 0` is
/// invariant at `eps = 0` and strongly hyperbolic normal to itself when `a >> b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialKickMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
    pub eps: f64,
}

impl PolynomialKickMap {
    fn eval<S: PhaseScalar>(&self, s: &[S; 4]) -> [S; 4] {
        let [x, y, px, py] = s.clone();
        let xy2 = x.clone() * y.clone() * y.clone();
        let x2y = x.clone() * x.clone() * y.clone();
        let px1 = px + x.clone() * self.a + xy2 * self.c + y.clone() * self.eps;
        let py1 = py + y.clone() * self.b + x2y * self.c + y.clone() * y.clone() * self.e + x.clone() * self.eps;
        [x + px1.clone(), y + py1.clone(), px1, py1]
    }
}

impl SymplecticMap for PolynomialKickMap {
    fn eps(&self) -> f64 {
        self.eps
    }
    fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..*self }
    }
    fn kind(&self) -> MapKind {
        MapKind::Explicit
    }
    fn apply(&self, x: &State) -> Result<State, MapError> {
        Ok(State::from(self.eval(&[x[0], x[1], x[2], x[3]])))
    }
    fn apply_jacobian(&self, x: &State) -> Result<(State, Matrix4<f64>), MapError> {
        let s: [Dual<4>; 4] = std::array::from_fn(|i| Dual::variable(x[i], i));
        let f = self.eval(&s);
        Ok((State::from_fn(|i, _| f[i].v), Matrix4::from_fn(|i, j| f[i].d[j])))
    }
    fn apply_jet(&self, v: &SeriesVector) -> Result<SeriesVector, MapError> {
        let out = self.eval(v);
        if out.iter().all(|c| c.is_finite()) {
            Ok(out)
        } else {
            Err(MapError::NonFinite)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kick_map_is_symplectic() {
        let m = PolynomialKickMap { a: 3.0, b: 0.2, c: 0.5, e: 0.7, eps: 0.1 };
        let (_, df) = m.apply_jacobian(&State::new(0.3, -0.2, 0.1, 0.4)).unwrap();
        let j = crate::spo::symplectic_j();
        assert!((df.transpose() * j * df - j).amax() < 1e-13);
    }
}
