mod common;

use nalgebra::{Matrix4, SVD};
use spo_core::map::{LinearMap, PolynomialKickMap, SymplecticMap};
use spo_core::separatrix::{
    fundamental_domain, invariance_coefficients, order_error, parameterize, sample_curves, Branch, Scale,
    SeparatrixError, SeparatrixParameterization, DOMAIN_CEILING,
};
use spo_core::spo::{quasi_newton_solve, NearDiagonalFloquet, PeriodicOrbitSolution, SolveMode, SolverConfig};
use spo_core::systems::ResonanceLabel;
use spo_core::{Complex64, State};

fn null_vector(m: &Matrix4<f64>, l: f64) -> State {
    let svd = SVD::new(m - Matrix4::identity() * l, false, true);
    let i = svd.singular_values.imin();
    svd.v_t.unwrap().row(i).transpose()
}

/// Real eigenvalues of `m` sorted by modulus.
fn real_eigenvalues(m: &Matrix4<f64>) -> [f64; 4] {
    let mut e: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.re).collect();
    e.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    [e[0], e[1], e[2], e[3]]
}

/// Fixed point `x` of `map`, traversed twice as a 1/2 orbit, with the weak
/// hyperbolic pair as center pair; polished by the quasi-Newton solver.
fn fixed_point_solution<M: SymplecticMap>(map: &M, x: State) -> PeriodicOrbitSolution {
    let (_, df) = map.apply_jacobian(&x).unwrap();
    let [s, w1, w2, u] = real_eigenvalues(&df);
    let c = |z: f64| Complex64::new(z, 0.0);
    let cols = [null_vector(&df, w1), null_vector(&df, w2), null_vector(&df, s), null_vector(&df, u)];
    let guess = PeriodicOrbitSolution {
        eps: map.eps(),
        label: ResonanceLabel::new(1, 2).unwrap(),
        x: vec![x; 2],
        p: vec![Matrix4::from_columns(&cols).map(c); 2],
        lambda: NearDiagonalFloquet {
            lambda1: c(w1),
            lambda2: c(w2),
            t: c(0.0),
            lambda_s: vec![s; 2],
            lambda_u: vec![u; 2],
        },
        mode: SolveMode::Perturbed,
        tol: 1e-12,
        history: vec![],
    };
    quasi_newton_solve(map, &guess, &SolverConfig { tol: 1e-12, ..Default::default() }).unwrap()
}

fn kick() -> PolynomialKickMap {
    PolynomialKickMap { a: 3.0, b: 0.05, c: 1.0, e: 0.5, eps: 0.01 }
}

#[test]
fn linear_map_has_flat_separatrix() {
    let p0 = Matrix4::new(1.0, 0.2, 0.0, 0.1, 0.0, 1.0, 0.3, 0.0, 0.1, 0.0, 1.0, 0.2, 0.0, 0.1, 0.0, 1.0);
    let m = p0 * Matrix4::from_diagonal(&State::new(0.8, 1.25, 0.5, 2.0)) * p0.try_inverse().unwrap();
    let map = LinearMap::new(m);
    let sol = fixed_point_solution(&map, State::zeros());
    for branch in [Branch::WeakStable, Branch::WeakUnstable] {
        let wp = parameterize(&map, &sol, branch, 6, Scale::Fixed(1.0)).unwrap();
        let expect = if branch == Branch::WeakStable { 0.8 } else { 1.25 };
        assert!((wp.lambda - expect).abs() < 1e-12);
        for d in 2..=6 {
            assert!(wp.coefficient_norm(d) < 1e-12, "order {d}");
        }
        let dom = fundamental_domain(&map, &wp, 1e-6, 16).unwrap();
        assert!(dom.radii.iter().all(|&r| r == DOMAIN_CEILING));
    }
}

#[test]
fn kick_map_branch_is_tangent_and_exact() {
    let map = kick();
    let sol = fixed_point_solution(&map, State::zeros());
    let (_, df) = map.apply_jacobian(&State::zeros()).unwrap();
    for branch in [Branch::WeakStable, Branch::WeakUnstable] {
        let wp = parameterize(&map, &sol, branch, 12, Scale::Fixed(0.5)).unwrap();
        let w1 = wp.w[0][1];
        assert!((df * w1 - w1 * wp.lambda).amax() < 1e-12 * w1.amax());
        assert!((w1.amax() - 0.5).abs() < 1e-15);

        // Coefficients of F(W(s)) - W(lambda s) vanish through the degree.
        let coeffs = invariance_coefficients(&map, &wp.w, wp.lambda, 12).unwrap();
        for (d, c) in coeffs[0].iter().enumerate() {
            let scale = wp.coefficient_norm(d).max(1e-300);
            assert!(c.amax() < 1e-11 * scale.max(1.0), "order {d}: {:e}", c.amax());
        }

        // The residual of a degree-d polynomial is O(s^(d+1)).
        let r1 = wp.residual(&map, 0, 1e-2).unwrap();
        let r2 = wp.residual(&map, 0, 2e-2).unwrap();
        assert!(r1 < 1e-14 || r2 / r1 > 2f64.powi(10), "{r1:e} {r2:e}");
    }
}

#[test]
fn second_order_error_matches_divided_differences() {
    let map = kick();
    let sol = fixed_point_solution(&map, State::zeros());
    let wp = parameterize(&map, &sol, Branch::WeakUnstable, 1, Scale::Fixed(1.0)).unwrap();
    let e2 = order_error(&map, &wp.w, wp.lambda, 2, 1e-10).unwrap()[0];
    // W_{<2} is linear, so E_2 is half the second derivative of F along W_1.
    let (x, v) = (wp.w[0][0], wp.w[0][1]);
    let h = 1e-3;
    let f = |s: f64| map.apply(&(x + v * s)).unwrap();
    let fd = (f(h) - f(0.0) * 2.0 + f(-h)) / (2.0 * h * h);
    assert!((e2 - fd).amax() < 1e-4 * fd.amax());
}

#[test]
fn order_error_requires_exact_lengths() {
    let map = kick();
    let sol = fixed_point_solution(&map, State::zeros());
    let wp = parameterize(&map, &sol, Branch::WeakUnstable, 3, Scale::Fixed(1.0)).unwrap();
    assert!(matches!(order_error(&map, &wp.w, wp.lambda, 2, 1e-10), Err(SeparatrixError::Precondition(_))));
}

fn pendulum_branches(degree: usize, scale: Scale) -> (PeriodicOrbitSolution, Vec<SeparatrixParameterization>) {
    let sol = common::pendulum_hyperbolic(1e-2, 10).pop().unwrap();
    let map = common::pendulum_map();
    let w = [Branch::WeakStable, Branch::WeakUnstable]
        .into_iter()
        .map(|b| parameterize(&map, &sol, b, degree, scale).unwrap())
        .collect();
    (sol, w)
}

#[test]
fn scale_changes_coefficients_covariantly() {
    let (_, a) = pendulum_branches(8, Scale::Fixed(1.0));
    let (_, b) = pendulum_branches(8, Scale::Fixed(0.25));
    for (wa, wb) in a.iter().zip(&b) {
        for k in 0..wa.len() {
            for d in 0..=8 {
                let want = wa.w[k][d] * 0.25f64.powi(d as i32);
                assert!((wb.w[k][d] - want).amax() < 1e-10 * want.amax().max(1.0), "k {k} d {d}");
            }
        }
    }
}

#[test]
fn higher_degree_widens_the_domain() {
    let map = common::pendulum_map();
    let (_, high) = pendulum_branches(20, Scale::Auto);
    for wp in &high {
        let low = parameterize(&map, &common::pendulum_hyperbolic(1e-2, 10).pop().unwrap(), wp.branch, 1, Scale::Fixed(wp.alpha))
            .unwrap();
        let dh = fundamental_domain(&map, wp, 1e-6, 64).unwrap();
        let dl = fundamental_domain(&map, &low, 1e-6, 64).unwrap();
        assert!(dh.min > dl.min, "{} vs {}", dh.min, dl.min);

        // Just past the radius the residual exceeds the tolerance.
        let m = map.with_eps(wp.eps);
        for (k, &r) in dh.radii.iter().enumerate() {
            assert!(r < DOMAIN_CEILING);
            let worst = (1..=64)
                .flat_map(|i| [1.0, -1.0].map(|sg| sg * 1.05 * r * i as f64 / 64.0))
                .map(|s| wp.residual(&m, k, s).unwrap())
                .fold(0.0, f64::max);
            assert!(worst >= 1e-6, "k {k}: {worst:e}");
        }
    }
}

#[test]
fn curves_sample_every_orbit_point() {
    let (_, w) = pendulum_branches(4, Scale::Fixed(0.1));
    let radii = vec![0.5; w[0].len()];
    let pts = sample_curves(&w[0], &radii, 11);
    assert_eq!(pts.len(), 11 * w[0].len());
    assert_eq!(pts[0].s, -0.5);
    assert_eq!(pts[10].s, 0.5);
    assert_eq!(pts[5].x, w[0].w[0][0]);
    let one = sample_curves(&w[0], &radii, 1);
    assert!(one.iter().all(|p| p.s == 0.0));
}

#[test]
fn rejects_elliptic_orbits_and_bad_input() {
    let map = common::pendulum_map();
    let ell = spo_core::spo::continue_family(&map, &common::pendulum_init(3, 0.0), 1e-2, 10, &Default::default())
        .unwrap()
        .pop()
        .unwrap();
    assert!(matches!(parameterize(&map, &ell, Branch::WeakStable, 5, Scale::Auto), Err(SeparatrixError::Precondition(_))));
    let (sol, mut w) = pendulum_branches(3, Scale::Fixed(0.1));
    assert!(parameterize(&map, &sol, Branch::WeakStable, 0, Scale::Auto).is_err());
    assert!(parameterize(&map, &sol, Branch::WeakStable, 3, Scale::Fixed(0.0)).is_err());
    w[0].w[1][0][0] += 1e-3;
    assert!(matches!(fundamental_domain(&map, &w[0], 1e-6, 8), Err(SeparatrixError::Inconsistent { k: 0, .. })));
}
