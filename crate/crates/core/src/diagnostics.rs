//! One WN or rPGD step rewritten as a gradient step on a ridge-regularized
//! least-squares objective with a step-dependent weight `λ_t`, plus
//! summaries of discrete and continuous trajectories.
//!
//! With `G = Aᵀ(Ax_t − y)` the rewrites are
//!
//! ```text
//! rPGD: x_{t+1} = x_t − s(G + λ_t x_t),        s = η g_t g_{t+1} / ‖v_t‖
//! WN:   x_{t+1} = x_t − s(G + (λ_t/η) x_t),    s = η g_t g_{t+1} / (‖w_t‖‖w_{t+1}‖)
//! ```

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::optimizers::{Method, OptState, StopReason, Trajectory};
use crate::problem::LinearProblem;

fn nonzero(v: f64, what: &'static str) -> Result<f64> {
    if v == 0.0 || !v.is_finite() {
        Err(Error::DivisionByZero(what))
    } else {
        Ok(v)
    }
}

/// `λ_t = (g_t‖v_t‖ − g_{t+1}) / (η g_t² g_{t+1})`.
pub fn adaptive_lambda_rpgd(prev: &OptState, next: &OptState, eta: f64, v_norm: f64) -> Result<f64> {
    let den = nonzero(eta * prev.g * prev.g * next.g, "eta * g_t^2 * g_{t+1}")?;
    Ok((prev.g * v_norm - next.g) / den)
}

/// `λ_t = (‖w_{t+1}‖‖w_t‖/(g_{t+1}g_t)) (1 − g_{t+1}‖w_t‖/(g_t‖w_{t+1}‖) − η g_{t+1}/‖w_{t+1}‖ ⟨w_t/‖w_t‖², G⟩)`.
pub fn adaptive_lambda_wn(p: &LinearProblem, prev: &OptState, next: &OptState, eta: f64) -> Result<f64> {
    p.check_len(&prev.w)?;
    p.check_len(&next.w)?;
    let n0 = nonzero(prev.w.norm(), "||w_t||")?;
    let n1 = nonzero(next.w.norm(), "||w_{t+1}||")?;
    let g0 = nonzero(prev.g, "g_t")?;
    let g1 = nonzero(next.g, "g_{t+1}")?;
    let grad = p.loss_gradient(&(&prev.w * (g0 / n0)));
    let inner = prev.w.dot(&grad) / (n0 * n0);
    let k = 1.0 - g1 * n0 / (g0 * n1) - eta * g1 / n1 * inner;
    Ok(n1 * n0 / (g1 * g0) * k)
}

fn relative_gap(got: &DVector<f64>, want: &DVector<f64>) -> f64 {
    (got - want).norm() / want.norm().max(1.0)
}

/// Distance between `x_{t+1}` and the regularized gradient step from `x_t`,
/// relative to `max(1, ‖x_{t+1}‖)`.
pub fn rpgd_reconstruction_residual(p: &LinearProblem, prev: &OptState, next: &OptState, eta: f64, v_norm: f64) -> Result<f64> {
    p.check_len(&prev.w)?;
    let lambda = adaptive_lambda_rpgd(prev, next, eta, v_norm)?;
    let x = &prev.w * prev.g;
    let s = eta * prev.g * next.g / nonzero(v_norm, "||v_t||")?;
    let rebuilt = &x - (p.loss_gradient(&x) + &x * lambda) * s;
    Ok(relative_gap(&rebuilt, &(&next.w * next.g)))
}

pub fn wn_reconstruction_residual(p: &LinearProblem, prev: &OptState, next: &OptState, eta: f64) -> Result<f64> {
    let lambda = adaptive_lambda_wn(p, prev, next, eta)?;
    let n0 = prev.w.norm();
    let n1 = next.w.norm();
    let x = &prev.w * (prev.g / n0);
    let s = eta * prev.g * next.g / (n0 * n1);
    let rebuilt = &x - (p.loss_gradient(&x) + &x * (lambda / nonzero(eta, "eta")?)) * s;
    Ok(relative_gap(&rebuilt, &(&next.w * (next.g / n1))))
}

/// Per-step `λ_t` and reconstruction residuals over consecutive recorded snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTrace {
    pub t: Vec<usize>,
    pub lambda: Vec<f64>,
    pub residual: Vec<f64>,
}

pub fn lambda_trace(p: &LinearProblem, traj: &Trajectory) -> Result<LambdaTrace> {
    let mut out = LambdaTrace { t: Vec::new(), lambda: Vec::new(), residual: Vec::new() };
    for pair in traj.snapshots.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.t != a.t + 1 || a.method != b.method {
            continue;
        }
        let Some(info) = a.step else { continue };
        let prev = OptState { g: a.g, w: a.w.clone(), t: a.t };
        let next = OptState { g: b.g, w: b.w.clone(), t: b.t };
        let (lambda, residual) = match a.method {
            Method::Gd => continue,
            Method::Rpgd => {
                let v = info.v_norm.ok_or_else(|| Error::Precondition("projected step without a recorded ||v||".into()))?;
                (adaptive_lambda_rpgd(&prev, &next, info.eta, v)?, rpgd_reconstruction_residual(p, &prev, &next, info.eta, v)?)
            }
            Method::Wn => (adaptive_lambda_wn(p, &prev, &next, info.eta)?, wn_reconstruction_residual(p, &prev, &next, info.eta)?),
        };
        out.t.push(a.t);
        out.lambda.push(lambda);
        out.residual.push(residual);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryReport {
    pub method: Method,
    /// `‖x̂‖` of the represented final iterate.
    pub final_norm: f64,
    pub final_loss: f64,
    pub steps: usize,
    pub stop: StopReason,
    /// First recorded step at or below the threshold.
    pub steps_to_threshold: Option<usize>,
    /// `(t, ‖w⊥‖)` over recorded snapshots.
    pub wperp_curve: Vec<(usize, f64)>,
    pub g_curve: Vec<(usize, f64)>,
    /// Largest reconstruction residual over consecutive recorded steps.
    pub max_identity_residual: Option<f64>,
}

pub fn trajectory_report(p: &LinearProblem, traj: &Trajectory, loss_threshold: f64) -> Result<TrajectoryReport> {
    let last = traj.last();
    let trace = lambda_trace(p, traj)?;
    Ok(TrajectoryReport {
        method: traj.method,
        final_norm: last.iterate().norm(),
        final_loss: last.loss,
        steps: traj.steps,
        stop: traj.stop,
        steps_to_threshold: traj.snapshots.iter().find(|s| s.loss <= loss_threshold).map(|s| s.t),
        wperp_curve: traj.snapshots.iter().map(|s| (s.t, s.wperp_norm)).collect(),
        g_curve: traj.snapshots.iter().map(|s| (s.t, s.g)).collect(),
        max_identity_residual: trace.residual.iter().copied().reduce(f64::max),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowReport {
    pub c: f64,
    pub final_norm: f64,
    pub final_loss: f64,
    pub final_time: f64,
    pub invariant_drift: Option<f64>,
    pub wperp_curve: Vec<(f64, f64)>,
    pub g_curve: Vec<(f64, f64)>,
}

pub fn flow_report(traj: &FlowTrajectory) -> FlowReport {
    let last = traj.last();
    FlowReport {
        c: traj.c,
        final_norm: traj.final_iterate().norm(),
        final_loss: last.loss,
        final_time: last.time,
        invariant_drift: traj.invariant_drift(),
        wperp_curve: traj.nodes.iter().map(|n| (n.time, n.wperp_norm)).collect(),
        g_curve: traj.nodes.iter().map(|n| (n.time, n.g)).collect(),
    }
}
