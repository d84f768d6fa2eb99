use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use wnorm_core::diagnostics::{lambda_trace, rpgd_reconstruction_residual, trajectory_report, wn_reconstruction_residual};
use wnorm_core::generate::{gen_orthogonal, initial_direction, GenSpec};
use wnorm_core::optimizers::*;
use wnorm_core::rng::SeededRng;
use wnorm_core::LinearProblem;

fn random_problem(m: usize, d: usize, seed: u64) -> LinearProblem {
    let mut rng = SeededRng::new(seed);
    LinearProblem::new(rng.normal_matrix(m, d), rng.normal_vector(m)).unwrap()
}

fn naive_loss(a: &DMatrix<f64>, y: &DVector<f64>, x: &DVector<f64>) -> f64 {
    0.5 * (a * x - y).norm_squared()
}

fn aligned(p: &LinearProblem, w: DVector<f64>) -> DVector<f64> {
    if p.y().dot(&(p.a() * &w)) < 0.0 {
        -w
    } else {
        w
    }
}

fn orthogonal(seed: u64) -> (LinearProblem, DVector<f64>) {
    let (p, _) = gen_orthogonal(&GenSpec::new(20, 50, 1.0, 3.0, seed).unwrap()).unwrap();
    let w0 = initial_direction(&p, seed, None).unwrap();
    (p, w0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_recombines(seed in 0u64..10_000, m in 1usize..8, extra in 1usize..10) {
        let p = random_problem(m, m + extra, seed);
        let z = SeededRng::new(seed ^ 0xabc).normal_vector(m + extra) * 5.0;
        let dec = p.decompose(&z).unwrap();
        prop_assert!((&dec.parallel + &dec.perp - &z).norm() <= 1e-12 * z.norm());
        prop_assert!((p.a() * &dec.perp).norm() <= 1e-10 * z.norm() * p.a().norm());
        prop_assert!(dec.parallel.dot(&dec.perp).abs() <= 1e-10 * z.norm_squared());
    }

    #[test]
    fn min_norm_solution_is_feasible_and_in_row_space(seed in 0u64..10_000, m in 1usize..8, extra in 1usize..10) {
        let p = random_problem(m, m + extra, seed);
        let sol = p.min_norm_solution();
        let a = p.a();
        let y = p.y();
        prop_assert!((a * &sol.x_star - y).norm() <= 1e-8 * y.norm());
        let gram = a * a.transpose();
        let oracle = a.transpose() * gram.lu().solve(y).unwrap();
        prop_assert!((&sol.x_star - &oracle).norm() <= 1e-8 * oracle.norm());
        prop_assert!(p.decompose(&sol.x_star).unwrap().perp.norm() <= 1e-10 * sol.g_star);
        prop_assert!((sol.w_star.norm() - 1.0).abs() < 1e-12);
        prop_assert!(p.loss(&sol.x_star).unwrap() <= 1e-16 * y.norm_squared());
    }

    #[test]
    fn loss_is_nonnegative_and_matches_naive(seed in 0u64..10_000) {
        let p = random_problem(4, 9, seed);
        let x = SeededRng::new(seed + 1).normal_vector(9);
        let l = p.loss(&x).unwrap();
        prop_assert!(l >= 0.0);
        prop_assert!((l - naive_loss(p.a(), p.y(), &x)).abs() <= 1e-12 * l.max(1.0));
    }

    #[test]
    fn rpgd_keeps_unit_direction(seed in 0u64..10_000, g0 in 0.1f64..4.0, eta in 1e-3f64..0.2, gamma in 0.0f64..0.2) {
        let p = random_problem(5, 12, seed);
        let w0 = initial_direction(&p, seed, None).unwrap();
        let mut s = OptState::new(g0, w0);
        for _ in 0..20 {
            let step = rpgd_step(&p, &s, eta, gamma).unwrap();
            prop_assert!((step.state.w.norm() - 1.0).abs() < 1e-12);
            s = step.state;
        }
    }

    #[test]
    fn wn_direction_gradient_is_orthogonal(seed in 0u64..10_000, g in -3.0f64..3.0, scale in 0.1f64..10.0) {
        let p = random_problem(5, 12, seed);
        let w = SeededRng::new(seed + 7).normal_vector(12) * scale;
        let (_, dw) = wn_gradients(&p, g, &w).unwrap();
        prop_assert!(w.dot(&dw).abs() <= 1e-12 * (w.norm() * dw.norm()).max(1.0));
    }

    #[test]
    fn wn_objective_ignores_direction_scale(seed in 0u64..10_000, g in -3.0f64..3.0, k in 0.05f64..20.0) {
        let p = random_problem(5, 12, seed);
        let w = SeededRng::new(seed + 3).normal_vector(12);
        let kw = &w * k;
        let h = wn_objective(&p, g, &w);
        prop_assert!((h - wn_objective(&p, g, &kw)).abs() <= 1e-12 * h.max(1.0));
        let (dg, dw) = wn_gradients(&p, g, &w).unwrap();
        let (kdg, kdw) = wn_gradients(&p, g, &kw).unwrap();
        prop_assert!((dg - kdg).abs() <= 1e-12 * dg.abs().max(1.0));
        prop_assert!((&dw - kdw * k).norm() <= 1e-12 * dw.norm().max(1.0));
    }

    #[test]
    fn reconstruction_identity_on_random_steps(seed in 0u64..10_000, g0 in 0.2f64..3.0, eta in 1e-3f64..0.1, gamma in 0.0f64..0.05) {
        let p = random_problem(4, 10, seed);
        let w0 = SeededRng::new(seed + 11).normal_vector(10).normalize();
        let prev = OptState::new(g0, w0);
        let step = rpgd_step(&p, &prev, eta, gamma).unwrap();
        let r = rpgd_reconstruction_residual(&p, &prev, &step.state, eta, step.v_norm).unwrap();
        prop_assert!(r < 1e-10, "rpgd residual {}", r);
        let next = wn_step(&p, &prev, eta, gamma).unwrap();
        let r = wn_reconstruction_residual(&p, &prev, &next, eta).unwrap();
        prop_assert!(r < 1e-10, "wn residual {}", r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn scale_is_nondecreasing_below_target(seed in 0u64..1000, ratio in 0.1f64..0.9, eps in 0.05f64..0.3) {
        let (p, w0) = orthogonal(seed);
        let w0 = aligned(&p, w0);
        let g_star = p.min_norm_solution().g_star;
        let g0 = ratio * g_star;
        let params = ScheduleParams { epsilon: eps, gamma2: 0.05, ..Default::default() };
        for variant in [Variant::TwoStageA, Variant::TwoStageB] {
            let sched = make_schedule(variant, &p, g0, &w0, &params).unwrap();
            for method in [Method::Rpgd, Method::Wn] {
                let traj = run(&p, method, OptState::new(g0, w0.clone()), &sched, StopRule::new(5000, 0.0), 1).unwrap();
                for pair in traj.snapshots.windows(2) {
                    prop_assert!(pair[1].g >= pair[0].g - 1e-12, "{:?} {:?}: g fell from {} to {}", variant, method, pair[0].g, pair[1].g);
                }
                let trace = lambda_trace(&p, &traj).unwrap();
                prop_assert!(!trace.lambda.is_empty());
                prop_assert!(trace.lambda.iter().all(|l| *l > 0.0), "{:?} {:?}: nonpositive lambda", variant, method);
            }
        }
    }
}

#[test]
fn small_step_rpgd_lands_near_min_norm_scale() {
    let (p, w0) = orthogonal(0);
    let sched = Schedule::constant(0.005, 0.005);
    for g0 in [0.25, 0.5, 1.0, 1.5] {
        let traj = run(&p, Method::Rpgd, OptState::new(g0, w0.clone()), &sched, StopRule::new(2_000_000, 1e-10), 1000).unwrap();
        let rep = trajectory_report(&p, &traj, 1e-8).unwrap();
        assert_eq!(rep.stop, StopReason::LossThreshold);
        let rel = (rep.final_norm - 3.0).abs() / 3.0;
        assert!(rel < 0.05, "g0 {g0}: final norm {}", rep.final_norm);
    }
}

#[test]
fn report_fields_match_the_trajectory() {
    let (p, w0) = orthogonal(3);
    let sched = Schedule::constant(0.05, 0.05);
    for method in [Method::Gd, Method::Wn, Method::Rpgd] {
        let start = match method {
            Method::Gd => OptState::new(1.0, &w0 * 0.5),
            _ => OptState::new(0.5, w0.clone()),
        };
        let traj = run(&p, method, start, &sched, StopRule::new(50_000, 1e-9), 1).unwrap();
        let rep = trajectory_report(&p, &traj, 1e-4).unwrap();
        let last = traj.snapshots.last().unwrap();
        let x = match method {
            Method::Gd => last.w.clone(),
            Method::Rpgd => &last.w * last.g,
            Method::Wn => &last.w * (last.g / last.w.norm()),
        };
        assert!((rep.final_norm - x.norm()).abs() <= 1e-12 * x.norm());
        let loss = naive_loss(p.a(), p.y(), &x);
        assert!((rep.final_loss - loss).abs() <= 1e-12_f64.max(1e-9 * loss));
        let first = traj.snapshots.iter().find(|s| naive_loss(p.a(), p.y(), &s.iterate()) <= 1e-4).map(|s| s.t);
        assert_eq!(rep.steps_to_threshold, first);
        assert_eq!(rep.g_curve.len(), traj.snapshots.len());
        for ((t, perp), s) in rep.wperp_curve.iter().zip(&traj.snapshots) {
            assert_eq!(*t, s.t);
            let dir = match method {
                Method::Gd => s.w.clone(),
                _ => s.w.normalize(),
            };
            let dec = p.decompose(&dir).unwrap();
            assert!((perp - dec.perp.norm()).abs() <= 1e-12);
        }
        match method {
            Method::Gd => assert_eq!(rep.max_identity_residual, None),
            _ => assert!(rep.max_identity_residual.unwrap() < 1e-10),
        }
    }
}

#[test]
fn gd_from_zero_reaches_min_norm() {
    let (p, _) = orthogonal(5);
    let sched = Schedule::constant(0.5, 0.0);
    let traj = run(&p, Method::Gd, OptState::new(1.0, DVector::zeros(50)), &sched, StopRule::new(100_000, 1e-14), 100).unwrap();
    let rep = trajectory_report(&p, &traj, 1e-10).unwrap();
    assert!((rep.final_norm - 3.0).abs() < 1e-4);
}
