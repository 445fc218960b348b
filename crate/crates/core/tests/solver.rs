mod support;

use std::sync::Arc;

use minmove::boundary::{Fourier, FourierTerm, RotatingAffine, StationaryAffine, TimeDatum};
use minmove::geometry::{discrete_lipschitz, mesh_domain, mesh_domain_jittered};
use minmove::solver::{solve, SolverConfig, SolverError, Stepper};
use minmove::{BoundaryDatum, ConvexDomain, ConvexIntegrand, Field, Mesh, Point, Vec2};
use proptest::prelude::*;

fn config(mesh: &Arc<Mesh>, datum: Arc<dyn TimeDatum>, horizon: f64, h: f64, l: f64) -> SolverConfig {
    let dom = ConvexDomain::unit_disk();
    let data = BoundaryDatum::new(datum, horizon, &dom);
    SolverConfig::new(mesh.clone(), ConvexIntegrand::quadratic(1.0), data, h, l).unwrap()
}

fn small_mesh(seed: u64) -> Arc<Mesh> {
    Arc::new(mesh_domain_jittered(&ConvexDomain::unit_disk(), 0.35, seed, 0.2).unwrap())
}

#[test]
fn unconstrained_step_matches_direct_solve() {
    let mesh = Arc::new(mesh_domain_jittered(&ConvexDomain::unit_disk(), 0.2, 3, 0.25).unwrap());
    let cfg = config(&mesh, Arc::new(RotatingAffine::unit()), 1.0, 0.05, 50.0);
    let stepper = Stepper::new(&cfg);
    let u_prev = mesh.interpolate(|p| (3.0 * p.x).sin() * p.y);
    let g = cfg.data.slice(&mesh, 0.4);
    let (v, stats) = stepper.step(&u_prev, &g, &u_prev, 1).unwrap();
    assert!(!stats.constraint_active);
    let oracle = support::heat_step(&mesh, &u_prev, &g, 0.05);
    assert!((&v - &oracle).amax() < 1e-8, "{}", (&v - &oracle).amax());
}

#[test]
fn constrained_step_matches_interior_point_oracle() {
    let mesh = small_mesh(11);
    let (h, l) = (0.2, 1.2);
    let cfg = config(&mesh, Arc::new(RotatingAffine::unit()), 1.0, h, l);
    let stepper = Stepper::new(&cfg);
    let g = cfg.data.slice(&mesh, 0.7);
    let u_prev = mesh.interpolate(|p| p.x * 0.3 + 2.0 * (1.0 - p.norm_squared()));
    let (v, stats) = stepper.step(&u_prev, &g, &u_prev, 1).unwrap();
    assert!(stats.constraint_active);
    assert!(discrete_lipschitz(&v, &mesh) <= l + 1e-8);
    let oracle = support::qcqp_step(&mesh, &u_prev, &g, h, l);
    let ours = support::step_objective(&mesh, &v, &u_prev, h);
    assert!((ours - oracle.value).abs() <= 1e-7 * oracle.value.abs(), "{ours} vs {}", oracle.value);
    assert!((&v - &oracle.solution).amax() < 1e-3);
}

#[test]
fn stationary_harmonic_data_is_a_fixed_point_of_the_discrete_problem() {
    // A discrete solution of the stationary problem is not moved by the scheme.
    let mesh = Arc::new(mesh_domain(&ConvexDomain::unit_disk(), 0.25).unwrap());
    let term = FourierTerm { k: 2, omega: 0.0, phase: 0.0, re: 0.4, im: 0.1 };
    let cfg = config(&mesh, Arc::new(Fourier { terms: vec![term] }), 0.5, 0.1, 10.0);
    let g = cfg.data.slice(&mesh, 0.0);
    let stationary = support::heat_step(&mesh, &g, &g, 1e12);
    let mut cfg = cfg;
    cfg.initial = Some(stationary.clone());
    let traj = solve(&cfg).unwrap();
    for u in traj.steps() {
        assert!((u - &stationary).amax() < 1e-9);
    }
}

#[test]
fn affine_data_stay_affine() {
    let mesh = Arc::new(mesh_domain(&ConvexDomain::unit_disk(), 0.2).unwrap());
    let slope = Vec2::new(0.3, -0.9);
    let cfg = config(&mesh, Arc::new(StationaryAffine { slope, offset: 0.2 }), 0.3, 0.1, 2.0);
    let traj = solve(&cfg).unwrap();
    let exact = mesh.interpolate(|p: &Point| slope.dot(p) + 0.2);
    assert!((traj.steps().last().unwrap() - exact).amax() < 1e-10);
}

#[test]
fn too_small_bound_is_rejected() {
    let mesh = small_mesh(1);
    let cfg = config(&mesh, Arc::new(RotatingAffine::unit()), 1.0, 0.25, 0.9);
    assert!(matches!(solve(&cfg), Err(SolverError::InfeasibleConstraint { .. })));
}

#[test]
fn step_count_must_divide_the_horizon() {
    let dom = ConvexDomain::unit_disk();
    let data = BoundaryDatum::new(Arc::new(RotatingAffine::unit()), 1.0, &dom);
    let res = SolverConfig::new(small_mesh(2), ConvexIntegrand::quadratic(1.0), data, 0.3, 4.0);
    assert!(matches!(res, Err(SolverError::InvalidConfig(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn steps_are_admissible_and_decrease_energy(seed in 0u64..1000, amp in 0.0f64..2.0, t in 0.0f64..6.0) {
        let mesh = small_mesh(seed % 7);
        let (h, l) = (0.1, 1.5);
        let cfg = config(&mesh, Arc::new(RotatingAffine::unit()), 1.0, h, l);
        let stepper = Stepper::new(&cfg);
        let g = cfg.data.slice(&mesh, t);
        let noise = |p: &Point| amp * ((seed as f64 + 1.0) * p.x).sin() * (1.0 - p.norm_squared());
        let u_prev: Field = &g + mesh.interpolate(noise);
        let (v, _) = stepper.step(&u_prev, &g, &u_prev, 1).unwrap();
        prop_assert!(discrete_lipschitz(&v, &mesh) <= l + 1e-8);
        for i in mesh.boundary_indices() {
            prop_assert!((v[i] - g[i]).abs() < 1e-12);
        }
        // u_prev shares the boundary values of g, so the minimizer beats it when admissible.
        if discrete_lipschitz(&u_prev, &mesh) <= l {
            let ours = support::step_objective(&mesh, &v, &u_prev, h);
            let prev = support::step_objective(&mesh, &u_prev, &u_prev, h);
            prop_assert!(ours <= prev + 1e-9);
        }
    }
}
