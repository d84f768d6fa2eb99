//! Discrete-time GD, weight-normalized GD and reparametrized projected GD.
//!
//! Both reparametrized steppers evaluate the `g` and `w` gradients at the
//! current pair `(g_t, w_t)` and then update both coordinates.

mod checks;
mod run;
mod schedule;

pub use checks::{check_general_matrix_bound, check_orthogonal_identities, t1_general, GeneralBoundReport, IdentityReport, T1Bound};
pub use run::{run, Snapshot, StepInfo, StopReason, StopRule, Trajectory};
pub use schedule::{make_schedule, EtaRule, GammaRule, Schedule, ScheduleParams, Variant};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problem::LinearProblem;

/// Smallest norm accepted for a direction before it counts as zero.
pub const NORM_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Gd,
    Wn,
    Rpgd,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::Wn => "wn",
            Method::Rpgd => "rpgd",
        }
    }

    /// Iterate represented by a `(g, w)` pair under this parametrization.
    pub fn represented(self, g: f64, w: &DVector<f64>) -> DVector<f64> {
        match self {
            Method::Gd => w.clone(),
            Method::Rpgd => w * g,
            Method::Wn => w * (g / w.norm()),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gd" => Ok(Method::Gd),
            "wn" => Ok(Method::Wn),
            "rpgd" => Ok(Method::Rpgd),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

/// `(g, w)` pair with a step counter. For GD, `w` holds the iterate and `g = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub g: f64,
    pub w: DVector<f64>,
    pub t: usize,
}

impl OptState {
    pub fn new(g: f64, w: DVector<f64>) -> Self {
        Self { g, w, t: 0 }
    }
}

pub fn gd_step(p: &LinearProblem, x: &DVector<f64>, eta: f64) -> DVector<f64> {
    x - p.loss_gradient(x) * eta
}

/// `h(w, g) = ½‖g A w/‖w‖ − y‖²`.
pub fn wn_objective(p: &LinearProblem, g: f64, w: &DVector<f64>) -> f64 {
    p.loss_of(&Method::Wn.represented(g, w))
}

/// `f(w, g) = ½‖g A w − y‖²`.
pub fn rpgd_objective(p: &LinearProblem, g: f64, w: &DVector<f64>) -> f64 {
    p.loss_of(&(w * g))
}

/// `(∂h/∂g, ∂h/∂w)` for the weight-normalized objective.
pub fn wn_gradients(p: &LinearProblem, g: f64, w: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    let n = w.norm();
    if n < NORM_FLOOR {
        return Err(Error::ZeroDirection);
    }
    let v = w / n;
    let grad = p.loss_gradient(&(&v * g));
    let dg = v.dot(&grad);
    let dw = (&grad - &v * dg) * (g / n);
    Ok((dg, dw))
}

/// `(∂f/∂g, ∂f/∂w)` for the unconstrained objective `f(w, g)`.
pub fn rpgd_gradients(p: &LinearProblem, g: f64, w: &DVector<f64>) -> (f64, DVector<f64>) {
    let grad = p.loss_gradient(&(w * g));
    (w.dot(&grad), grad * g)
}

pub fn wn_step(p: &LinearProblem, s: &OptState, eta: f64, gamma: f64) -> Result<OptState> {
    let (dg, dw) = wn_gradients(p, s.g, &s.w)?;
    Ok(OptState {
        g: s.g - gamma * dg,
        w: &s.w - dw * eta,
        t: s.t + 1,
    })
}

/// Result of one projected step; `v_norm` is `‖w − η∇_w f‖` before projection.
#[derive(Debug, Clone, PartialEq)]
pub struct RpgdStep {
    pub state: OptState,
    pub v_norm: f64,
}

pub fn rpgd_step(p: &LinearProblem, s: &OptState, eta: f64, gamma: f64) -> Result<RpgdStep> {
    let (dg, dw) = rpgd_gradients(p, s.g, &s.w);
    let v = &s.w - dw * eta;
    let v_norm = v.norm();
    if v_norm < NORM_FLOOR {
        return Err(Error::ZeroProjection);
    }
    Ok(RpgdStep {
        state: OptState {
            g: s.g - gamma * dg,
            w: v / v_norm,
            t: s.t + 1,
        },
        v_norm,
    })
}
