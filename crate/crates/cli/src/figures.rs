//! Sweeps behind the figure commands. Points run on the rayon pool and are
//! collected in index order, so results do not depend on scheduling.

use nalgebra::DVector;
use rayon::prelude::*;
use wnorm_core::generate::{gen_conditioned, gen_orthogonal, gen_sensing, initial_direction, GenSpec};
use wnorm_core::optimizers::{run, EtaRule, GammaRule, Method, OptState, Schedule, StopReason, StopRule, Trajectory};
use wnorm_core::sensing::{grid_search, min_nuclear_reference, nuclear_norm, FactorState, Parametrization, Regime, SensingStop, StepRule};
use wnorm_core::{LinearProblem, Result};

use crate::config::Settings;
use crate::output::{fmt_float, Chart, Series, Table};

pub const REGRESSION_M: usize = 20;
pub const REGRESSION_D: usize = 50;
pub const G_STAR: f64 = 3.0;
pub const REGRESSION_LOSS: f64 = 1e-5;
pub const FIG4_G0: f64 = 2.8;
pub const SENSING_D: usize = 30;
pub const SENSING_R: usize = 4;
pub const SENSING_M: usize = 60;
pub const SENSING_START: f64 = 0.5;

pub const METHODS: [Method; 3] = [Method::Gd, Method::Wn, Method::Rpgd];

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionRow {
    pub g0: f64,
    pub method: Method,
    pub panel: String,
    pub final_norm: f64,
    pub final_loss: f64,
    pub steps: usize,
    pub wperp_final: f64,
    pub seed: u64,
    pub kappa: Option<f64>,
    pub stop: StopReason,
}

impl RegressionRow {
    pub fn truncated(&self) -> bool {
        self.stop == StopReason::MaxSteps
    }
}

#[derive(Debug, Clone)]
pub struct RegressionFigure {
    pub rows: Vec<RegressionRow>,
    /// Present when trajectories were requested; aligned with `rows`.
    pub trajectories: Vec<Option<Trajectory>>,
}

pub const REGRESSION_HEADER: [&str; 8] = ["g0", "method", "panel", "final_norm", "final_loss", "steps", "wperp_final", "seed"];

impl RegressionFigure {
    pub fn table(&self) -> Table {
        let with_kappa = self.rows.iter().any(|r| r.kappa.is_some());
        let mut header = REGRESSION_HEADER.to_vec();
        if with_kappa {
            header.push("kappa");
        }
        let mut t = Table::new(&header);
        for r in &self.rows {
            let mut row = vec![
                fmt_float(r.g0),
                r.method.name().to_string(),
                r.panel.clone(),
                fmt_float(r.final_norm),
                fmt_float(r.final_loss),
                r.steps.to_string(),
                fmt_float(r.wperp_final),
                r.seed.to_string(),
            ];
            if with_kappa {
                row.push(fmt_float(r.kappa.unwrap_or(f64::NAN)));
            }
            t.push(row);
        }
        t
    }

    pub fn panels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.panel) {
                out.push(r.panel.clone());
            }
        }
        out
    }

    /// One chart per panel: final norm against `g0` (or `κ` on a log axis).
    pub fn charts(&self, title: &str) -> Vec<(String, Chart)> {
        self.panels()
            .into_iter()
            .map(|panel| {
                let rows: Vec<&RegressionRow> = self.rows.iter().filter(|r| r.panel == panel).collect();
                let by_kappa = rows.iter().any(|r| r.kappa.is_some());
                let series = METHODS
                    .iter()
                    .map(|&m| Series {
                        label: m.name().to_string(),
                        points: rows.iter().filter(|r| r.method == m).map(|r| (r.kappa.unwrap_or(r.g0), r.final_norm)).collect(),
                    })
                    .collect();
                let chart = Chart {
                    title: format!("{title} ({panel})"),
                    x_label: if by_kappa { "kappa".into() } else { "g0".into() },
                    y_label: "||x_hat||".into(),
                    log_x: by_kappa,
                    log_y: false,
                    series,
                    references: vec![("g*".into(), G_STAR)],
                };
                (panel, chart)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Job<'a> {
    problem: &'a LinearProblem,
    w0: &'a DVector<f64>,
    g0: f64,
    method: Method,
    panel: &'a str,
    schedule: &'a Schedule,
    kappa: Option<f64>,
}

fn run_job(job: Job<'_>, s: &Settings) -> Result<(RegressionRow, Option<Trajectory>)> {
    let start = match job.method {
        Method::Gd => OptState::new(1.0, job.w0 * job.g0),
        _ => OptState::new(job.g0, job.w0.clone()),
    };
    let record_every = if s.dump_trajectories { s.dump_every } else { usize::MAX };
    let traj = run(job.problem, job.method, start, job.schedule, StopRule::new(s.max_steps, REGRESSION_LOSS), record_every)?;
    let last = traj.last();
    let row = RegressionRow {
        g0: job.g0,
        method: job.method,
        panel: job.panel.to_string(),
        final_norm: last.iterate().norm(),
        final_loss: last.loss,
        steps: traj.steps,
        wperp_final: last.wperp_norm,
        seed: s.seed,
        kappa: job.kappa,
        stop: traj.stop,
    };
    Ok((row, s.dump_trajectories.then_some(traj)))
}

fn run_jobs(jobs: Vec<Job<'_>>, s: &Settings) -> Result<RegressionFigure> {
    let results: Vec<Result<(RegressionRow, Option<Trajectory>)>> = jobs.par_iter().map(|j| run_job(*j, s)).collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut trajectories = Vec::with_capacity(results.len());
    for r in results {
        let (row, traj) = r?;
        rows.push(row);
        trajectories.push(traj);
    }
    Ok(RegressionFigure { rows, trajectories })
}

/// Orthogonal rows, `m = 20`, `d = 50`, `g* = 3`, and the shared initial direction.
pub fn orthogonal_instance(seed: u64) -> Result<(LinearProblem, DVector<f64>)> {
    let (p, _) = gen_orthogonal(&GenSpec::new(REGRESSION_M, REGRESSION_D, 1.0, G_STAR, seed)?)?;
    let w0 = initial_direction(&p, seed, None)?;
    Ok((p, w0))
}

pub fn figure1(s: &Settings) -> Result<RegressionFigure> {
    let (p, w0) = orthogonal_instance(s.seed)?;
    let schedule = Schedule::constant(0.005, 0.005);
    let mut jobs = Vec::new();
    for g0 in s.g0_grid(true) {
        for method in METHODS {
            jobs.push(Job { problem: &p, w0: &w0, g0, method, panel: "small_step", schedule: &schedule, kappa: None });
        }
    }
    run_jobs(jobs, s)
}

pub fn figure3(s: &Settings) -> Result<RegressionFigure> {
    let (p, w0) = orthogonal_instance(s.seed)?;
    let same = Schedule::constant(0.1, 0.1);
    let optimal = Schedule::custom(EtaRule::Optimal { lambda_max: p.lambda_max() }, GammaRule::Constant(0.005));
    let mut jobs = Vec::new();
    for (panel, schedule) in [("same_step", &same), ("optimal_eta", &optimal)] {
        for g0 in s.g0_grid(false) {
            for method in METHODS {
                jobs.push(Job { problem: &p, w0: &w0, g0, method, panel, schedule, kappa: None });
            }
        }
    }
    run_jobs(jobs, s)
}

pub fn figure4(s: &Settings) -> Result<RegressionFigure> {
    let instances = s
        .kappas
        .iter()
        .map(|&kappa| {
            let (p, _) = gen_conditioned(&GenSpec::new(REGRESSION_M, REGRESSION_D, kappa, G_STAR, s.seed)?)?;
            let w0 = initial_direction(&p, s.seed, None)?;
            Ok((kappa, p, w0))
        })
        .collect::<Result<Vec<_>>>()?;
    let panel_a = Schedule::constant(0.01, 0.01);
    let panel_b = Schedule::custom(EtaRule::Gated { value: 0.1, after: 5000 }, GammaRule::Constant(1.0));
    let mut jobs = Vec::new();
    for (panel, schedule) in [("A", &panel_a), ("B", &panel_b)] {
        for (kappa, p, w0) in &instances {
            for method in METHODS {
                jobs.push(Job { problem: p, w0, g0: FIG4_G0, method, panel, schedule, kappa: Some(*kappa) });
            }
        }
    }
    run_jobs(jobs, s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingRow {
    pub alpha: f64,
    pub method: String,
    pub regime: String,
    pub nuclear_norm: f64,
    pub final_loss: f64,
    pub steps: usize,
    pub converged: bool,
    pub seed: u64,
    /// Selected base stepsize (DR iterations are reported in `steps` for the reference).
    pub c: f64,
}

#[derive(Debug, Clone)]
pub struct SensingFigure {
    pub rows: Vec<SensingRow>,
    pub reference_nuclear: f64,
    pub reference_residual: f64,
    pub truth_nuclear: f64,
}

pub const SENSING_HEADER: [&str; 8] = ["alpha", "method", "regime", "nuclear_norm", "final_loss", "steps", "converged", "seed"];

pub const REFERENCE_METHOD: &str = "min_nuclear";

impl SensingFigure {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&SENSING_HEADER);
        for r in &self.rows {
            t.push(vec![
                fmt_float(r.alpha),
                r.method.clone(),
                r.regime.clone(),
                fmt_float(r.nuclear_norm),
                fmt_float(r.final_loss),
                r.steps.to_string(),
                r.converged.to_string(),
                r.seed.to_string(),
            ]);
        }
        t
    }

    pub fn find(&self, method: &str, regime: &str, alpha: f64) -> Option<&SensingRow> {
        self.rows.iter().find(|r| r.method == method && r.regime == regime && r.alpha == alpha)
    }

    pub fn charts(&self) -> Vec<(String, Chart)> {
        [Regime::Same, Regime::TwoPhase]
            .iter()
            .map(|regime| {
                let series = Parametrization::ALL
                    .iter()
                    .map(|k| Series {
                        label: k.method_name().to_string(),
                        points: self.rows.iter().filter(|r| r.regime == regime.name() && r.method == k.method_name()).map(|r| (r.alpha, r.nuclear_norm)).collect(),
                    })
                    .collect();
                let chart = Chart {
                    title: format!("Nuclear norm of the recovered matrix ({})", regime.name()),
                    x_label: "alpha".into(),
                    y_label: "||X_hat||_*".into(),
                    log_x: true,
                    log_y: false,
                    series,
                    references: vec![("min nuclear".into(), self.reference_nuclear), ("X*".into(), self.truth_nuclear)],
                };
                (regime.name().to_string(), chart)
            })
            .collect()
    }
}

pub fn figure5(s: &Settings) -> Result<SensingFigure> {
    let sp = gen_sensing(SENSING_D, SENSING_R, SENSING_M, s.seed)?;
    let reference = min_nuclear_reference(&sp, 1e-9, 200_000)?;
    let stop = SensingStop {
        max_steps: s.sensing_max_steps,
        stall_window: s.sensing_stall_window,
        ..SensingStop::default()
    };
    let mut points = Vec::new();
    for regime in [Regime::Same, Regime::TwoPhase] {
        for &alpha in &s.alphas {
            for kind in Parametrization::ALL {
                points.push((regime, alpha, kind));
            }
        }
    }
    let results: Vec<Result<SensingRow>> = points
        .par_iter()
        .map(|&(regime, alpha, kind)| {
            let init = FactorState::initial(kind, SENSING_D, alpha, s.seed);
            let rule = StepRule { frobenius_scaled_wn: s.wn_frobenius, ..StepRule::new(regime) };
            let run = grid_search(&sp, &init, rule, stop, SENSING_START, s.sensing_halvings)?;
            Ok(SensingRow {
                alpha,
                method: kind.method_name().to_string(),
                regime: regime.name().to_string(),
                nuclear_norm: nuclear_norm(&run.state.represented()?),
                final_loss: run.loss,
                steps: run.steps,
                converged: run.converged,
                seed: s.seed,
                c: run.c,
            })
        })
        .collect();
    let mut rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    rows.push(SensingRow {
        alpha: f64::NAN,
        method: REFERENCE_METHOD.into(),
        regime: "reference".into(),
        nuclear_norm: reference.nuclear,
        final_loss: wnorm_core::sensing::sensing_loss(&sp, &reference.x),
        steps: reference.iterations,
        converged: reference.converged,
        seed: s.seed,
        c: f64::NAN,
    });
    Ok(SensingFigure {
        rows,
        reference_nuclear: reference.nuclear,
        reference_residual: reference.residual,
        truth_nuclear: nuclear_norm(sp.x_star()),
    })
}
