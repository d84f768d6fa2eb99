use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use wnorm_core::flow::{integrate_flow, FlowStop};
use wnorm_core::ode::Tolerance;
use wnorm_core::optimizers::{make_schedule, run, Method, OptState, ScheduleParams, StopRule, Trajectory, Variant};
use wnorm_lab::config::Settings;
use wnorm_lab::figures::{self, RegressionFigure, REGRESSION_LOSS};
use wnorm_lab::output::{fmt_float, write_file, Table};
use wnorm_lab::suites::{run_suite, SUITES};

#[derive(Parser, Debug)]
#[command(name = "wnorm-lab", version, about = "Weight normalization and projected-direction experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// RNG seed.
    #[arg(long, global = true, env = "WNORM_LAB_SEED")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Flat key=value settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Also write per-run trajectory CSVs.
    #[arg(long, global = true)]
    dump_trajectories: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Final norm against g0, small equal stepsizes.
    Figure1,
    /// Final norm against g0, equal large stepsizes and optimal direction stepsizes.
    Figure3,
    /// Final norm against condition number at g0 = 2.8.
    Figure4,
    /// Nuclear norm of matrix sensing solutions against initialization scale.
    Figure5,
    /// Run a named property suite.
    Verify {
        /// One of: invariant, identities, bounds, gradients, flow-vs-discrete.
        suite: String,
    },
    /// Integrate the continuous-time flow on a seeded instance.
    Flow {
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Initial scale as a fraction of g*.
        #[arg(long, default_value_t = 0.5)]
        g0_ratio: f64,
        #[arg(long, default_value_t = 100.0)]
        t_max: f64,
    },
    /// Run one optimizer on the figure-1 instance.
    Run {
        #[arg(long, default_value = "rpgd")]
        method: String,
        #[arg(long, default_value_t = 1.0)]
        g0: f64,
        /// constant, two_stage_a, two_stage_b, fixed_g_then_gd or optimal_eta_constant_gamma.
        #[arg(long, default_value = "constant")]
        schedule: String,
        #[arg(long, default_value_t = 0.005)]
        eta: f64,
        #[arg(long, default_value_t = 0.005)]
        gamma: f64,
    },
}

fn settings(common: &Common) -> Result<Settings> {
    let mut s = Settings::default();
    if let Some(path) = &common.config {
        s.apply(&Settings::load(path)?)?;
    }
    if let Some(seed) = common.seed {
        s.seed = seed;
    }
    if let Some(out) = &common.out {
        s.out = out.clone();
    }
    if let Some(jobs) = common.jobs {
        s.jobs = Some(jobs);
    }
    s.dump_trajectories |= common.dump_trajectories;
    Ok(s)
}

fn trajectory_table(traj: &Trajectory) -> Table {
    let d = traj.last().w.len();
    let mut header = vec!["t".to_string(), "method".into(), "g".into(), "loss".into(), "wperp_norm".into()];
    header.extend((0..d).map(|i| format!("w{i}")));
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&refs);
    for s in &traj.snapshots {
        let mut row = vec![s.t.to_string(), s.method.name().to_string(), fmt_float(s.g), fmt_float(s.loss), fmt_float(s.wperp_norm)];
        row.extend(s.w.iter().map(|v| fmt_float(*v)));
        t.push(row);
    }
    t
}

fn write_regression(name: &str, title: &str, fig: &RegressionFigure, s: &Settings) -> Result<()> {
    let csv = s.out.join(format!("{name}.csv"));
    fig.table().write(&csv)?;
    for (panel, chart) in fig.charts(title) {
        write_file(&s.out.join(format!("{name}_{panel}.svg")), &chart.render())?;
    }
    for (row, traj) in fig.rows.iter().zip(&fig.trajectories) {
        if let Some(traj) = traj {
            let x = row.kappa.unwrap_or(row.g0);
            let file = format!("{name}_{}_{}_{}.csv", row.panel, row.method.name(), fmt_float(x));
            trajectory_table(traj).write(&s.out.join("trajectories").join(file))?;
        }
    }
    let truncated: Vec<_> = fig.rows.iter().filter(|r| r.truncated()).collect();
    for r in &truncated {
        eprintln!("truncated: panel={} method={} g0={} kappa={:?} steps={} loss={:e}", r.panel, r.method.name(), r.g0, r.kappa, r.steps, r.final_loss);
    }
    println!("wrote {} ({} rows, {} truncated)", csv.display(), fig.rows.len(), truncated.len());
    Ok(())
}

fn cmd_flow(s: &Settings, c: f64, g0_ratio: f64, t_max: f64) -> Result<()> {
    let (p, w0) = wnorm_lab::suites::seeded_flow_instance(s.seed)?;
    let sol = p.min_norm_solution();
    let g0 = g0_ratio * sol.g_star;
    let traj = integrate_flow(&p, g0, &w0, c, FlowStop::loss(t_max, 1e-12), Tolerance::default())?;
    let mut t = Table::new(&["time", "g", "loss", "wperp_norm", "invariant"]);
    for n in &traj.nodes {
        t.push(vec![fmt_float(n.time), fmt_float(n.g), fmt_float(n.loss), fmt_float(n.wperp_norm), fmt_float(n.invariant.unwrap_or(f64::NAN))]);
    }
    let path = s.out.join("flow.csv");
    t.write(&path)?;
    let last = traj.last();
    println!(
        "m={} d={} g*={:.6} outcome={:?} time={:.4} loss={:e} final_norm={:.6} invariant_drift={:e}",
        p.m(),
        p.d(),
        sol.g_star,
        traj.outcome,
        last.time,
        last.loss,
        traj.final_iterate().norm(),
        traj.invariant_drift().unwrap_or(f64::NAN)
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_run(s: &Settings, method: &str, g0: f64, schedule: &str, eta: f64, gamma: f64) -> Result<()> {
    let method: Method = method.parse().map_err(|e: String| anyhow!(e))?;
    let variant: Variant = schedule.parse().map_err(|e: String| anyhow!(e))?;
    let (p, w0) = figures::orthogonal_instance(s.seed)?;
    let params = ScheduleParams { eta, gamma, ..Default::default() };
    let sched = make_schedule(variant, &p, g0, &w0, &params)?;
    let start = match method {
        Method::Gd => OptState::new(1.0, &w0 * g0),
        _ => OptState::new(g0, w0),
    };
    let traj = run(&p, method, start, &sched, StopRule::new(s.max_steps, REGRESSION_LOSS), s.dump_every)?;
    let path = s.out.join(format!("run_{}.csv", method.name()));
    trajectory_table(&traj).write(&path)?;
    let last = traj.last();
    println!(
        "method={} schedule={} steps={} stop={} final_norm={:.10} final_loss={:e} wperp={:e}",
        method.name(),
        variant.name(),
        traj.steps,
        traj.stop.name(),
        last.iterate().norm(),
        last.loss,
        last.wperp_norm
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<ExitCode> {
    let s = settings(&cli.common)?;
    if let Some(jobs) = s.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global().context("configuring worker pool")?;
    }
    match cli.command {
        Command::Figure1 => write_regression("figure1", "Final norm vs g0, eta = gamma = 0.005", &figures::figure1(&s)?, &s)?,
        Command::Figure3 => write_regression("figure3", "Final norm vs g0", &figures::figure3(&s)?, &s)?,
        Command::Figure4 => write_regression("figure4", "Final norm vs kappa, g0 = 2.8", &figures::figure4(&s)?, &s)?,
        Command::Figure5 => {
            let fig = figures::figure5(&s)?;
            let csv = s.out.join("figure5.csv");
            fig.table().write(&csv)?;
            for (regime, chart) in fig.charts() {
                write_file(&s.out.join(format!("figure5_{regime}.svg")), &chart.render())?;
            }
            for r in fig.rows.iter().filter(|r| !r.converged) {
                eprintln!("not converged: alpha={} method={} regime={} loss={:e}", r.alpha, r.method, r.regime, r.final_loss);
            }
            println!("wrote {} (reference nuclear norm {:.6}, residual {:e})", csv.display(), fig.reference_nuclear, fig.reference_residual);
        }
        Command::Verify { suite } => {
            let Some(report) = run_suite(&suite, s.seed) else {
                eprintln!("unknown suite `{suite}`; expected one of: {}", SUITES.join(", "));
                return Ok(ExitCode::from(2));
            };
            let report = report?;
            print!("{}", report.render());
            return Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Flow { c, g0_ratio, t_max } => cmd_flow(&s, c, g0_ratio, t_max)?,
        Command::Run { method, g0, schedule, eta, gamma } => cmd_run(&s, &method, g0, &schedule, eta, gamma)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
