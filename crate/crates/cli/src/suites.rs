//! Property suites behind `wnorm-lab verify`.

use nalgebra::{DMatrix, DVector};
use wnorm_core::flow::{integrate_flow, FlowStop};
use wnorm_core::general_loss::{logistic_loss, LowDimLoss};
use wnorm_core::generate::{gen_conditioned, gen_orthogonal, gen_sensing, initial_direction, GenSpec};
use wnorm_core::ode::Tolerance;
use wnorm_core::optimizers::{
    check_general_matrix_bound, check_orthogonal_identities, make_schedule, rpgd_gradients, rpgd_objective, run, wn_gradients, wn_objective, Method, OptState, ScheduleParams,
    Schedule, StopRule, Trajectory, Variant,
};
use wnorm_core::rng::{derive_seed, SeededRng};
use wnorm_core::sensing::{factor_gradients, sensing_loss, FactorState, Parametrization};
use wnorm_core::{LinearProblem, Result};

pub const SUITES: [&str; 5] = ["invariant", "identities", "bounds", "gradients", "flow-vs-discrete"];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value < threshold }
    }

    fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value >= threshold }
    }

    fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, threshold: 1.0, pass: ok }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.pass).count()
    }

    pub fn all_pass(&self) -> bool {
        self.passed() == self.checks.len()
    }

    /// One `key=value` line per check plus a summary line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "suite={} check={} value={:e} threshold={:e} status={}\n",
                self.suite,
                c.name,
                c.value,
                c.threshold,
                if c.pass { "PASS" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "suite={} passed={} total={} status={}\n",
            self.suite,
            self.passed(),
            self.checks.len(),
            if self.all_pass() { "PASS" } else { "FAIL" }
        ));
        out
    }
}

pub fn run_suite(name: &str, seed: u64) -> Option<Result<SuiteReport>> {
    let checks = match name {
        "invariant" => invariant(seed),
        "identities" => identities(seed),
        "bounds" => bounds(seed),
        "gradients" => gradients(seed),
        "flow-vs-discrete" => flow_vs_discrete(seed),
        _ => return None,
    };
    Some(checks.map(|checks| SuiteReport { suite: name.to_string(), checks }))
}

/// Gaussian problem whose size is drawn from the seed (`m ≤ 20`, `d ≤ 50`), with
/// an initial direction on the side where `yᵀAw0 > 0`.
pub fn seeded_flow_instance(seed: u64) -> Result<(LinearProblem, DVector<f64>)> {
    let mut rng = SeededRng::new(derive_seed(seed, 11));
    let m = 3 + (rng.next_u64() % 18) as usize;
    let d = m + 2 + (rng.next_u64() % (49 - m as u64)) as usize;
    let p = LinearProblem::new(rng.normal_matrix(m, d), rng.normal_vector(m))?;
    let w = initial_direction(&p, seed, None)?;
    let w = if p.y().dot(&(p.a() * &w)) < 0.0 { -w } else { w };
    Ok((p, w))
}

fn invariant(seed: u64) -> Result<Vec<Check>> {
    (0..20u64)
        .map(|k| {
            let (p, w0) = seeded_flow_instance(seed.wrapping_add(k))?;
            let g0 = 0.5 * p.min_norm_solution().g_star;
            let traj = integrate_flow(&p, g0, &w0, 1.0, FlowStop::loss(50.0, 1e-12), Tolerance::default())?;
            Ok(Check::below(format!("drift_{k}"), traj.invariant_drift().unwrap_or(f64::INFINITY), 1e-6))
        })
        .collect()
}

fn identities(seed: u64) -> Result<Vec<Check>> {
    let mut worst: f64 = 0.0;
    let mut steps = 0;
    for k in 0..5u64 {
        let (p, sol) = gen_orthogonal(&GenSpec::new(10, 30, 1.0, 2.0, seed.wrapping_add(k))?)?;
        let w0 = initial_direction(&p, seed.wrapping_add(k), None)?;
        let g0 = 0.4 + 0.3 * k as f64;
        let sched = make_schedule(Variant::OptimalEtaConstantGamma, &p, g0, &w0, &ScheduleParams { gamma: 0.05, ..Default::default() })?;
        let traj = run(&p, Method::Rpgd, OptState::new(g0, w0), &sched, StopRule::new(100, 0.0), 1)?;
        let rep = check_orthogonal_identities(&p, &sol, &traj)?;
        worst = worst.max(rep.max_residual());
        steps += rep.steps_checked;
    }
    Ok(vec![Check::below("max_identity_residual", worst, 1e-10), Check::at_least("steps_checked", steps as f64, 500.0)])
}

/// Measurements for one run of a two-stage schedule on an orthogonal instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageOutcome {
    pub variant: Variant,
    pub ratio: f64,
    pub t1: usize,
    pub wperp_at_t1: f64,
    pub final_alignment: f64,
    pub final_g: f64,
    pub final_loss: f64,
    pub g_star: f64,
}

impl TwoStageOutcome {
    /// `(1 − 2ε²)·g* ≤ g_T ≤ g*`.
    pub fn in_g_band(&self, eps: f64) -> bool {
        self.final_g >= (1.0 - 2.0 * eps * eps) * self.g_star && self.final_g <= self.g_star * (1.0 + 1e-12)
    }
}

pub fn two_stage_run(variant: Variant, ratio: f64, eps: f64, seed: u64) -> Result<TwoStageOutcome> {
    let (p, sol) = gen_orthogonal(&GenSpec::new(10, 30, 1.0, 2.0, seed)?)?;
    let w0 = initial_direction(&p, seed, None)?;
    let w0 = if w0.dot(&sol.w_star) < 0.0 { -w0 } else { w0 };
    let g0 = ratio * sol.g_star;
    let params = ScheduleParams { epsilon: eps, ..Default::default() };
    let sched = make_schedule(variant, &p, g0, &w0, &params)?;
    let t1 = sched.t1.unwrap_or(0);
    let traj = run(&p, Method::Rpgd, OptState::new(g0, w0), &sched, StopRule::new(usize::MAX, 0.0), 1)?;
    let at_t1 = traj.snapshots.iter().find(|s| s.t == t1).unwrap_or(traj.last());
    let last = traj.last();
    Ok(TwoStageOutcome {
        variant,
        ratio,
        t1,
        wperp_at_t1: at_t1.wperp_norm,
        final_alignment: last.w.dot(&sol.w_star),
        final_g: last.g,
        final_loss: last.loss,
        g_star: sol.g_star,
    })
}

/// Measurements for the fixed-scale phase followed by plain GD on a conditioned instance.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedScaleOutcome {
    pub kappa: f64,
    pub min_v_norm: f64,
    pub delta: f64,
    pub within_t1: bool,
    pub final_loss: f64,
    pub final_error: f64,
    pub eps: f64,
    pub g_star: f64,
}

pub fn fixed_scale_run(kappa: f64, delta: f64, eps: f64, seed: u64) -> Result<FixedScaleOutcome> {
    let (p, sol) = gen_conditioned(&GenSpec::new(10, 30, kappa, 2.0, seed)?)?;
    let w0 = initial_direction(&p, seed, None)?;
    let g0 = 0.9 * sol.g_star * p.lambda_min() / (2.0 + delta);
    let params = ScheduleParams { epsilon: eps, delta: Some(delta), ..Default::default() };
    let sched = make_schedule(Variant::FixedGThenGd, &p, g0, &w0, &params)?;
    let traj = run(&p, Method::Rpgd, OptState::new(g0, w0), &sched, StopRule::new(5_000_000, 1e-8), 1)?;
    let rep = check_general_matrix_bound(&p, &sol, g0, delta, eps, &traj)?;
    let last = traj.last();
    Ok(FixedScaleOutcome {
        kappa,
        min_v_norm: rep.min_v_norm,
        delta,
        within_t1: rep.within_t1,
        final_loss: last.loss,
        final_error: (last.iterate() - &sol.x_star).norm(),
        eps,
        g_star: sol.g_star,
    })
}

fn bounds(seed: u64) -> Result<Vec<Check>> {
    let eps = 1e-2;
    let mut checks = Vec::new();
    for variant in [Variant::TwoStageA, Variant::TwoStageB] {
        for ratio in [0.3, 0.5, 0.8] {
            let o = two_stage_run(variant, ratio, eps, seed)?;
            let tag = format!("{}_{ratio}", variant.name());
            checks.push(Check::below(format!("{tag}_wperp_t1"), o.wperp_at_t1, eps + 1e-15));
            checks.push(Check::at_least(format!("{tag}_alignment"), o.final_alignment, 1.0 - eps));
            if variant == Variant::TwoStageB {
                checks.push(Check::flag(format!("{tag}_g_band"), o.in_g_band(eps)));
                checks.push(Check::below(format!("{tag}_loss"), o.final_loss, 3.0 * eps * o.g_star * o.g_star));
            } else {
                // Schedule (a) bounds the loss by eps·g*² and makes no claim about g_T.
                checks.push(Check::below(format!("{tag}_loss"), o.final_loss, eps * o.g_star * o.g_star));
            }
        }
    }
    for kappa in [3.0, 10.0] {
        let o = fixed_scale_run(kappa, 0.5, eps, seed)?;
        let tag = format!("fixed_scale_kappa{kappa}");
        checks.push(Check::at_least(format!("{tag}_min_v_norm"), o.min_v_norm, 1.0 + o.delta));
        checks.push(Check::flag(format!("{tag}_within_t1"), o.within_t1));
        checks.push(Check::below(format!("{tag}_loss"), o.final_loss, 1e-8 * (1.0 + 1e-9)));
        checks.push(Check::below(format!("{tag}_error"), o.final_error, 2.0 * eps * o.g_star));
    }
    Ok(checks)
}

/// Largest relative gap between an analytic gradient and central differences of `f`.
pub fn fd_relative_error(f: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>, analytic: &DVector<f64>) -> f64 {
    let mut fd = DVector::zeros(x.len());
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        fd[i] = (f(&xp) - f(&xm)) / (2.0 * h);
    }
    (&fd - analytic).norm() / analytic.norm().max(fd.norm()).max(1e-12)
}

fn pack(g: f64, w: &DVector<f64>) -> DVector<f64> {
    let mut v = DVector::zeros(w.len() + 1);
    v[0] = g;
    v.rows_mut(1, w.len()).copy_from(w);
    v
}

fn state_vector(s: &FactorState) -> DVector<f64> {
    let mut v: Vec<f64> = s.scale.iter().copied().collect();
    v.extend_from_slice(s.factor.as_slice());
    DVector::from_vec(v)
}

fn state_from(kind: Parametrization, d: usize, k: usize, v: &DVector<f64>) -> FactorState {
    FactorState {
        kind,
        scale: DVector::from_column_slice(&v.as_slice()[..k]),
        factor: DMatrix::from_column_slice(d, d, &v.as_slice()[k..]),
    }
}

/// Worst finite-difference error per gradient family over `points` random points.
pub fn gradient_errors(seed: u64, points: usize) -> Result<Vec<(String, f64)>> {
    let mut rng = SeededRng::new(derive_seed(seed, 12));
    let p = LinearProblem::new(rng.normal_matrix(5, 12), rng.normal_vector(5))?;
    let sp = gen_sensing(5, 2, 12, seed)?;
    let labels = DVector::from_iterator(6, (0..6).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }));
    let logistic = logistic_loss(rng.normal_matrix(6, 10), labels)?;
    let mut worst = vec![0.0f64; 8];
    for _ in 0..points {
        let g = rng.uniform_in(0.3, 2.0);
        let w = rng.normal_vector(12);
        let (dg, dw) = wn_gradients(&p, g, &w)?;
        let f = |v: &DVector<f64>| wn_objective(&p, v[0], &v.rows(1, 12).into_owned());
        worst[0] = worst[0].max(fd_relative_error(&f, &pack(g, &w), &pack(dg, &dw)));
        let (dg, dw) = rpgd_gradients(&p, g, &w);
        let f = |v: &DVector<f64>| rpgd_objective(&p, v[0], &v.rows(1, 12).into_owned());
        worst[1] = worst[1].max(fd_relative_error(&f, &pack(g, &w), &pack(dg, &dw)));
        for (slot, kind) in Parametrization::ALL.into_iter().enumerate() {
            let mut s = FactorState::initial(kind, 5, rng.uniform_in(0.5, 1.5), rng.next_u64());
            s.factor += rng.normal_matrix(5, 5) * 0.1;
            let k = s.scale.len();
            let grad = factor_gradients(&sp, &s)?;
            let analytic = state_vector(&FactorState { kind, factor: grad.factor, scale: grad.scale });
            let f = |v: &DVector<f64>| sensing_loss(&sp, &state_from(kind, 5, k, v).represented().expect("nonzero factor"));
            worst[2 + slot] = worst[2 + slot].max(fd_relative_error(&f, &state_vector(&s), &analytic));
        }
        let x = rng.normal_vector(10);
        worst[7] = worst[7].max(fd_relative_error(&|v| logistic.value(v), &x, &logistic.gradient(&x)));
    }
    let names = ["wn", "rpgd", "sensing_gd", "sensing_wn", "sensing_wn_diag", "sensing_rpgd", "sensing_rpgd_diag", "logistic"];
    Ok(names.iter().map(|n| n.to_string()).zip(worst).collect())
}

fn gradients(seed: u64) -> Result<Vec<Check>> {
    Ok(gradient_errors(seed, 10)?.into_iter().map(|(n, e)| Check::below(format!("fd_{n}"), e, 1e-5)).collect())
}

/// Sup-over-time distance between WN and rPGD iterates at `η = γ = h` up to time `horizon`.
pub fn wn_rpgd_gap(p: &LinearProblem, g0: f64, w0: &DVector<f64>, h: f64, horizon: f64) -> Result<f64> {
    let steps = (horizon / h).round() as usize;
    let sched = Schedule::constant(h, h);
    let run_one = |m: Method| -> Result<Trajectory> { run(p, m, OptState::new(g0, w0.clone()), &sched, StopRule::new(steps, 0.0), 1) };
    let a = run_one(Method::Wn)?;
    let b = run_one(Method::Rpgd)?;
    Ok(a.snapshots.iter().zip(&b.snapshots).map(|(x, y)| (x.iterate() - y.iterate()).norm()).fold(0.0, f64::max))
}

fn flow_vs_discrete(seed: u64) -> Result<Vec<Check>> {
    let (p, w0) = seeded_flow_instance(seed)?;
    let g0 = 0.5 * p.min_norm_solution().g_star;
    let horizon = 5.0;
    let hs = [1e-2, 5e-3, 2.5e-3];
    let gaps = hs.iter().map(|&h| wn_rpgd_gap(&p, g0, &w0, h, horizon)).collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    for (i, pair) in gaps.windows(2).enumerate() {
        let ratio = pair[0] / pair[1];
        checks.push(Check { name: format!("gap_ratio_{i}"), value: ratio, threshold: 2.5, pass: (1.5..=2.5).contains(&ratio) });
    }
    let flow = integrate_flow(&p, g0, &w0, 1.0, FlowStop::time(horizon), Tolerance::default())?;
    let h = hs[2];
    let sched = Schedule::constant(h, h);
    let traj = run(&p, Method::Rpgd, OptState::new(g0, w0.clone()), &sched, StopRule::new((horizon / h).round() as usize, 0.0), usize::MAX)?;
    let gap = (traj.final_iterate() - flow.final_iterate()).norm();
    checks.push(Check::below("rpgd_vs_flow_at_horizon", gap, 50.0 * h));
    Ok(checks)
}
