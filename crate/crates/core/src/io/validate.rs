//! Independent re-check of a stored solution.

use serde::{Deserialize, Serialize};

use crate::map::SymplecticMap;
use crate::spo::{compute_residual, evaluate, symplectic_j, PeriodicOrbitSolution, SpoError, Stability};

/// Largest admissible `|DF^T J DF - J|` over the orbit.
pub const SYMPLECTIC_TOL: f64 = 1e-8;
/// Largest admissible `|prod lambda_s prod lambda_u - 1|`.
pub const NORMAL_PRODUCT_TOL: f64 = 1e-6;
/// Largest admissible `|(lambda1 lambda2)^q prod lambda_s prod lambda_u - 1|`.
pub const DETERMINANT_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub ok: bool,
}

impl Check {
    fn new(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, ok: value <= limit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub eps: f64,
    pub q: usize,
    pub stability: Stability,
    pub lambda1: [f64; 2],
    pub lambda2: [f64; 2],
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "eps = {:e}, {} points, {:?}", self.eps, self.q, self.stability)?;
        writeln!(f, "lambda1 = {} {:+}i, lambda2 = {} {:+}i", self.lambda1[0], self.lambda1[1], self.lambda2[0], self.lambda2[1])?;
        for c in &self.checks {
            let tag = if c.ok { "ok" } else { "BREACH" };
            writeln!(f, "{:<22} {:>12.3e}  (limit {:.1e})  {tag}", c.name, c.value, c.limit)?;
        }
        Ok(())
    }
}

/// Re-evaluates the map along the orbit and checks the invariance residuals,
/// the symplecticity of `DF`, and the multiplier identities.
pub fn validate_solution<M: SymplecticMap>(map: &M, sol: &PeriodicOrbitSolution) -> Result<ValidationReport, SpoError> {
    let map = map.with_eps(sol.eps);
    let ev = evaluate(&map, &sol.x)?;
    let res = compute_residual(sol, &ev)?;
    let j = symplectic_j();
    let symp = ev.df.iter().map(|m| (m.transpose() * j * m - j).amax()).fold(0.0, f64::max);
    let lam = &sol.lambda;
    let checks = vec![
        Check::new("invariance |E|", res.e_norm, sol.tol),
        Check::new("bundle |E_red|", res.e_red_norm, sol.tol),
        Check::new("symplectic defect", symp, SYMPLECTIC_TOL),
        Check::new("prod ls*lu - 1", (lam.normal_product() - 1.0).abs(), NORMAL_PRODUCT_TOL),
        Check::new("determinant - 1", (lam.determinant() - 1.0).norm(), DETERMINANT_TOL),
    ];
    Ok(ValidationReport {
        eps: sol.eps,
        q: sol.len(),
        stability: lam.stability(),
        lambda1: [lam.lambda1.re, lam.lambda1.im],
        lambda2: [lam.lambda2.re, lam.lambda2.im],
        checks,
    })
}
