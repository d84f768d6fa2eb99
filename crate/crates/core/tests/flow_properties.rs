use nalgebra::{DMatrix, DVector};
use wnorm_core::flow::{integrate_flow, predict_limit, rate_bound_time, FlowOutcome, FlowStop, RateBound};
use wnorm_core::generate::{gen_conditioned, gen_orthogonal, initial_direction, GenSpec};
use wnorm_core::ode::Tolerance;
use wnorm_core::rng::SeededRng;
use wnorm_core::LinearProblem;

fn random_problem(m: usize, d: usize, seed: u64) -> LinearProblem {
    let mut rng = SeededRng::new(seed);
    LinearProblem::new(rng.normal_matrix(m, d), rng.normal_vector(m)).unwrap()
}

fn aligned_start(p: &LinearProblem, seed: u64) -> DVector<f64> {
    let w = initial_direction(p, seed, None).unwrap();
    if p.y().dot(&(p.a() * &w)) < 0.0 {
        -w
    } else {
        w
    }
}

#[test]
fn conserved_quantity_along_random_flows() {
    for seed in 0..6 {
        let p = random_problem(8, 20, seed);
        let w0 = aligned_start(&p, seed);
        let traj = integrate_flow(&p, 0.7, &w0, 0.8, FlowStop::time(30.0), Tolerance::default()).unwrap();
        let drift = traj.invariant_drift().unwrap();
        assert!(drift < 1e-6, "seed {seed}: drift {drift}");
        assert!(traj.norm_drift() < 1e-9);
    }
}

#[test]
fn perp_component_scales_with_exponential_of_scale() {
    let p = random_problem(5, 12, 3);
    let w0 = aligned_start(&p, 3);
    let c = 1.3;
    let g0 = 0.4;
    let traj = integrate_flow(&p, g0, &w0, c, FlowStop::time(20.0), Tolerance::default()).unwrap();
    let perp0 = p.decompose(&w0).unwrap().perp;
    for n in traj.nodes.iter().step_by(7) {
        let expected = &perp0 * ((g0 * g0 - n.g * n.g) / (2.0 * c)).exp();
        let got = p.decompose(&n.w).unwrap().perp;
        assert!((got - expected).amax() < 1e-6);
    }
}

#[test]
fn loss_is_monotone_and_rate_within_bracket() {
    let p = random_problem(6, 15, 9);
    let w0 = aligned_start(&p, 9);
    let traj = integrate_flow(&p, 0.5, &w0, 2.0, FlowStop::loss(50.0, 1e-10), Tolerance::default()).unwrap();
    for pair in traj.nodes.windows(2) {
        assert!(pair[1].loss - pair[0].loss <= 1e-9);
    }
    for n in &traj.nodes {
        let (lo, hi) = n.rate_bounds;
        let slack = 1e-12 * lo.abs().max(1.0);
        assert!(n.loss_rate >= lo - slack && n.loss_rate <= hi + slack);
    }
}

#[test]
fn exact_limit_prediction_matches_integration() {
    for seed in 0..5 {
        let p = random_problem(5, 12, 100 + seed);
        let sol = p.min_norm_solution();
        let w0 = aligned_start(&p, seed);
        let g0 = 0.5 * sol.g_star;
        let traj = integrate_flow(&p, g0, &w0, 1.0, FlowStop::loss(1e4, 1e-14), Tolerance::default()).unwrap();
        assert_eq!(traj.outcome, FlowOutcome::LossThreshold);
        let predicted = predict_limit(&p, &sol, g0, &w0, 1.0).unwrap();
        let x = traj.final_iterate();
        assert!((&x - &predicted).norm() / predicted.norm() < 1e-4, "seed {seed}");
    }
}

#[test]
fn coordinate_example_limits() {
    let p = LinearProblem::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), DVector::from_vec(vec![1.0])).unwrap();
    let sol = p.min_norm_solution();
    let w0 = DVector::from_vec(vec![0.0, 1.0]);
    for (g0, expected) in [(0.25, 0.60871), (0.5, 0.66205), (0.75, 0.75677), (1.0, 0.89803)] {
        let traj = integrate_flow(&p, g0, &w0, 1.0, FlowStop::loss(1e3, 1e-10), Tolerance::default()).unwrap();
        let x = traj.final_iterate();
        assert!((x[0] - 1.0).abs() < 1e-4);
        assert!((x[1] - expected).abs() < 1e-4, "g0 {g0}: {}", x[1]);
        let predicted = predict_limit(&p, &sol, g0, &w0, 1.0).unwrap();
        assert!((x - predicted).amax() < 1e-4);
    }
}

#[test]
fn rate_bound_times_are_sufficient() {
    let mut applied = 0;
    for seed in 0..40u64 {
        let p = random_problem(4, 10, 500 + seed);
        let w0 = aligned_start(&p, seed);
        let sol = p.min_norm_solution();
        let g0 = sol.g_star * (0.3 + 0.1 * (seed % 8) as f64);
        let eps = 1e-4;
        if let RateBound::Time { time, .. } = rate_bound_time(&p, g0, &w0, 1.0, eps) {
            applied += 1;
            let traj = integrate_flow(&p, g0, &w0, 1.0, FlowStop::time(time), Tolerance::default()).unwrap();
            assert!(traj.last().loss <= eps, "seed {seed}: loss {} at {time}", traj.last().loss);
        }
    }
    assert!(applied >= 20);
}

#[test]
fn fixed_scale_flow_on_orthogonal_rows_aligns_with_solution() {
    let (p, sol) = gen_orthogonal(&GenSpec::new(5, 12, 1.0, 2.0, 4).unwrap()).unwrap();
    let w0 = aligned_start(&p, 4);
    let stop = FlowStop { t_max: 1e4, loss_threshold: None, stationarity_threshold: Some(1e-8) };
    let traj = integrate_flow(&p, 0.8, &w0, 0.0, stop, Tolerance::default()).unwrap();
    assert_eq!(traj.outcome, FlowOutcome::Stationary);
    let angle = traj.last().w.dot(&sol.w_star).clamp(-1.0, 1.0).acos();
    assert!(angle < 1e-4);
}

#[test]
fn fixed_scale_flow_then_restart_on_general_rows() {
    let (p, sol) = gen_conditioned(&GenSpec::new(5, 12, 3.0, 2.0, 6).unwrap()).unwrap();
    let w0 = aligned_start(&p, 6);
    let g = 0.6;
    let stop = FlowStop { t_max: 1e5, loss_threshold: None, stationarity_threshold: Some(1e-8) };
    let traj = integrate_flow(&p, g, &w0, 0.0, stop, Tolerance::default()).unwrap();
    assert_eq!(traj.outcome, FlowOutcome::Stationary);
    let last = traj.last();
    assert!(last.wperp_norm < 1e-6);
    let u = p.a().transpose() * p.residual(&(&last.w * g)).unwrap();
    let collinear = (&last.w - u.normalize() * g.signum()).norm();
    assert!(collinear < 1e-5, "collinearity residual {collinear}");
    let restart = integrate_flow(&p, g, &last.w, 1.0, FlowStop::loss(1e4, 1e-16), Tolerance::default()).unwrap();
    let fin = restart.last();
    assert!((fin.g - sol.g_star).abs() < 1e-4);
    assert!((&fin.w - &sol.w_star).norm() < 1e-4);
}
