use nalgebra::DVector;

use super::{gd_step, rpgd_step, wn_step, Method, OptState, Schedule};
use crate::error::{Error, Result};
use crate::problem::LinearProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_steps: usize,
    pub loss_threshold: f64,
}

impl StopRule {
    pub fn new(max_steps: usize, loss_threshold: f64) -> Self {
        Self { max_steps, loss_threshold }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    LossThreshold,
    MaxSteps,
    /// The schedule's prescribed number of steps was completed.
    Horizon,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::LossThreshold => "loss_threshold",
            StopReason::MaxSteps => "max_steps",
            StopReason::Horizon => "horizon",
        }
    }
}

/// Stepsizes used for the step taken from a snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub eta: f64,
    pub gamma: f64,
    /// Pre-projection norm `‖v_t‖` (rPGD only).
    pub v_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: usize,
    pub method: Method,
    pub g: f64,
    pub w: DVector<f64>,
    pub loss: f64,
    /// Null-space norm of the unit direction `w/‖w‖` (of the iterate itself under GD).
    pub wperp_norm: f64,
    /// `None` on the final snapshot.
    pub step: Option<StepInfo>,
}

impl Snapshot {
    pub fn iterate(&self) -> DVector<f64> {
        self.method.represented(self.g, &self.w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub method: Method,
    pub snapshots: Vec<Snapshot>,
    pub stop: StopReason,
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("a trajectory always holds its final snapshot")
    }

    pub fn final_iterate(&self) -> DVector<f64> {
        self.last().iterate()
    }
}

fn direction_perp(p: &LinearProblem, method: Method, w: &DVector<f64>) -> f64 {
    match method {
        Method::Gd => p.perp(w).norm(),
        Method::Rpgd => p.perp(w).norm(),
        Method::Wn => p.perp(w).norm() / w.norm(),
    }
}

/// Iterates `method` from `start` under `schedule` until the loss threshold,
/// the step cap or the schedule horizon is reached. Every `record_every`-th
/// state is kept, and the final state always is.
pub fn run(p: &LinearProblem, method: Method, start: OptState, schedule: &Schedule, stop: StopRule, record_every: usize) -> Result<Trajectory> {
    p.check_len(&start.w)?;
    let record_every = record_every.max(1);
    let mut state = OptState { t: 0, ..start };
    let mut current = method;
    let mut snapshots = Vec::new();
    loop {
        let t = state.t;
        if current != Method::Gd && schedule.switch_to_gd == Some(t) {
            state = OptState {
                g: 1.0,
                w: current.represented(state.g, &state.w),
                t,
            };
            current = Method::Gd;
        }
        if !state.g.is_finite() || state.w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: t });
        }
        let loss = p.loss_of(&current.represented(state.g, &state.w));
        if !loss.is_finite() {
            return Err(Error::NonFinite { step: t });
        }
        let reason = if loss <= stop.loss_threshold {
            Some(StopReason::LossThreshold)
        } else if schedule.horizon.is_some_and(|h| t >= h) {
            Some(StopReason::Horizon)
        } else if t >= stop.max_steps {
            Some(StopReason::MaxSteps)
        } else {
            None
        };
        let snapshot = |step: Option<StepInfo>, state: &OptState| Snapshot {
            t,
            method: current,
            g: state.g,
            w: state.w.clone(),
            loss,
            wperp_norm: direction_perp(p, current, &state.w),
            step,
        };
        if let Some(reason) = reason {
            snapshots.push(snapshot(None, &state));
            return Ok(Trajectory {
                method,
                snapshots,
                stop: reason,
                steps: t,
            });
        }
        let gamma = schedule.gamma_at(t);
        let (next, info) = match current {
            Method::Gd => {
                let eta = if schedule.switch_to_gd.is_some() {
                    schedule.gd_eta
                } else {
                    schedule.eta_at(Method::Gd, t, 1.0, 1.0)
                };
                let x = gd_step(p, &state.w, eta);
                (OptState { g: 1.0, w: x, t: t + 1 }, StepInfo { eta, gamma: 0.0, v_norm: None })
            }
            Method::Wn => {
                let eta = schedule.eta_at(Method::Wn, t, state.g, state.w.norm());
                (wn_step(p, &state, eta, gamma)?, StepInfo { eta, gamma, v_norm: None })
            }
            Method::Rpgd => {
                let eta = schedule.eta_at(Method::Rpgd, t, state.g, 1.0);
                let step = rpgd_step(p, &state, eta, gamma)?;
                (step.state, StepInfo { eta, gamma, v_norm: Some(step.v_norm) })
            }
        };
        if t % record_every == 0 {
            snapshots.push(snapshot(Some(info), &state));
        }
        state = next;
    }
}
