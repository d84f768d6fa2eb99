//! Continuous-time limit shared by WN and rPGD:
//!
//! ```text
//! dg/dt = c wᵀAᵀr,   dw/dt = g (I − wwᵀ/‖w‖²) Aᵀr,   r = y − Agw,
//! ```
//!
//! with `c` the ratio of the scale stepsize to the direction stepsize.
//! Along this flow `w⊥(t) = exp((g0² − g(t)²)/2c) w0⊥`, so
//! `‖w⊥‖·exp(g²/2c)` is conserved.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::ode::{DenseStep, Dopri5, Tolerance};
use crate::problem::{LinearProblem, MinNormSolution};

/// Drift of `‖w‖` from one that triggers a renormalization after a step.
pub const RENORMALIZE_DRIFT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub g: f64,
    pub w: DVector<f64>,
    pub time: f64,
    pub c: f64,
}

impl FlowState {
    pub fn new(g: f64, w: DVector<f64>, c: f64) -> Self {
        Self { g, w, time: 0.0, c }
    }

    pub fn iterate(&self) -> DVector<f64> {
        &self.w * self.g
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowStop {
    pub t_max: f64,
    pub loss_threshold: Option<f64>,
    /// Stop once `‖(dg/dt, dw/dt)‖` falls below this value.
    pub stationarity_threshold: Option<f64>,
}

impl FlowStop {
    pub fn time(t_max: f64) -> Self {
        Self {
            t_max,
            loss_threshold: None,
            stationarity_threshold: None,
        }
    }

    pub fn loss(t_max: f64, threshold: f64) -> Self {
        Self {
            loss_threshold: Some(threshold),
            ..Self::time(t_max)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowOutcome {
    LossThreshold,
    TimeLimit,
    Stationary,
    /// The initial point is a non-minimizing stationary point; nothing was integrated.
    SpuriousStart,
    /// The initial point is already a global minimizer.
    MinimizerStart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowNode {
    pub time: f64,
    pub g: f64,
    pub w: DVector<f64>,
    pub loss: f64,
    pub wperp_norm: f64,
    /// `‖w⊥‖·exp(g²/2c)`; `None` when `c = 0`.
    pub invariant: Option<f64>,
    /// Exact `d(½‖r‖²)/dt`.
    pub loss_rate: f64,
    /// `(−max{g², c}‖Aᵀr‖², −min{g², c}‖Aᵀr‖²)`.
    pub rate_bounds: (f64, f64),
    /// `hypot(g, yᵀAw/‖y‖)`, zero exactly on the spurious stationary set.
    pub spurious_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    pub c: f64,
    pub nodes: Vec<FlowNode>,
    pub outcome: FlowOutcome,
    pub renormalizations: usize,
    pub rhs_evals: usize,
}

impl FlowTrajectory {
    pub fn last(&self) -> &FlowNode {
        self.nodes.last().expect("a flow trajectory holds at least its initial node")
    }

    pub fn final_iterate(&self) -> DVector<f64> {
        &self.last().w * self.last().g
    }

    /// Largest `|I(t)/I(0) − 1|` of the conserved quantity.
    pub fn invariant_drift(&self) -> Option<f64> {
        let i0 = self.nodes.first()?.invariant?;
        self.nodes
            .iter()
            .map(|n| n.invariant.map(|i| (i / i0 - 1.0).abs()))
            .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))
    }

    /// Largest `|‖w(t)‖ − 1|`.
    pub fn norm_drift(&self) -> f64 {
        self.nodes.iter().map(|n| (n.w.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Right-hand side of the flow at `s`.
pub fn flow_rhs(p: &LinearProblem, s: &FlowState) -> (f64, DVector<f64>) {
    rhs_parts(p, s.g, &s.w, s.c)
}

fn rhs_parts(p: &LinearProblem, g: f64, w: &DVector<f64>, c: f64) -> (f64, DVector<f64>) {
    let r = p.residual_of(&(w * g));
    let u = p.a().transpose() * r;
    let wn2 = w.norm_squared();
    let wu = w.dot(&u);
    let dg = c * wu;
    let dw = (u - w * (wu / wn2)) * g;
    (dg, dw)
}

fn pack(g: f64, w: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(w.len() + 1);
    y[0] = g;
    y.rows_mut(1, w.len()).copy_from(w);
    y
}

fn unpack(y: &DVector<f64>) -> (f64, DVector<f64>) {
    (y[0], y.rows(1, y.len() - 1).into_owned())
}

fn make_node(p: &LinearProblem, time: f64, g: f64, w: DVector<f64>, c: f64) -> FlowNode {
    let r = p.residual_of(&(&w * g));
    let u = p.a().transpose() * &r;
    let wperp_norm = p.perp(&w).norm();
    let invariant = (c > 0.0).then(|| wperp_norm * (g * g / (2.0 * c)).exp());
    let y_norm = p.y().norm();
    let spurious_distance = g.hypot(p.y().dot(&(p.a() * &w)) / y_norm);
    FlowNode {
        time,
        loss: 0.5 * r.norm_squared(),
        wperp_norm,
        invariant,
        loss_rate: rate_from(&w, g, c, &u),
        rate_bounds: bounds_from(g, c, &u),
        spurious_distance,
        g,
        w,
    }
}

fn rate_from(w: &DVector<f64>, g: f64, c: f64, u: &DVector<f64>) -> f64 {
    let wn2 = w.norm_squared();
    let wu = w.dot(u);
    let proj = u.norm_squared() - wu * wu / wn2;
    -(c * wu * wu + g * g * proj)
}

fn bounds_from(g: f64, c: f64, u: &DVector<f64>) -> (f64, f64) {
    let n2 = u.norm_squared();
    let g2 = g * g;
    (-g2.max(c) * n2, -g2.min(c) * n2)
}

/// Integrates the flow from `(g0, w0)`, `‖w0‖ = 1`.
pub fn integrate_flow(p: &LinearProblem, g0: f64, w0: &DVector<f64>, c: f64, stop: FlowStop, tol: Tolerance) -> Result<FlowTrajectory> {
    p.check_len(w0)?;
    if (w0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition("initial direction must have unit norm".into()));
    }
    if !(c >= 0.0) {
        return Err(Error::Precondition(format!("stepsize ratio must be nonnegative, got {c}")));
    }
    let start = make_node(p, 0.0, g0, w0.clone(), c);
    let (dg0, dw0) = rhs_parts(p, g0, w0, c);
    if dg0 == 0.0 && dw0.iter().all(|&v| v == 0.0) {
        let outcome = if start.loss == 0.0 || p.residual_of(&(w0 * g0)).iter().all(|&v| v == 0.0) {
            FlowOutcome::MinimizerStart
        } else {
            FlowOutcome::SpuriousStart
        };
        return Ok(FlowTrajectory {
            c,
            nodes: vec![start],
            outcome,
            renormalizations: 0,
            rhs_evals: 1,
        });
    }
    if let Some(th) = stop.loss_threshold {
        if start.loss <= th {
            return Ok(FlowTrajectory {
                c,
                nodes: vec![start],
                outcome: FlowOutcome::LossThreshold,
                renormalizations: 0,
                rhs_evals: 1,
            });
        }
    }
    let rhs = |_t: f64, y: &DVector<f64>| {
        let (g, w) = unpack(y);
        let (dg, dw) = rhs_parts(p, g, &w, c);
        pack(dg, &dw)
    };
    let mut ode = Dopri5::new(rhs, 0.0, pack(g0, w0), tol, f64::INFINITY);
    let mut nodes = vec![start];
    let mut renormalizations = 0;
    let outcome = loop {
        let dense = ode.step(stop.t_max)?;
        let y = ode.y().clone();
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: nodes.len() });
        }
        let (g, mut w) = unpack(&y);
        let wn = w.norm();
        if (wn - 1.0).abs() > RENORMALIZE_DRIFT {
            w /= wn;
            ode.reset_state(pack(g, &w));
            renormalizations += 1;
        }
        let node = make_node(p, ode.t(), g, w, c);
        if let Some(th) = stop.loss_threshold {
            if node.loss <= th {
                let prev_loss = nodes.last().map(|n| n.loss).unwrap_or(f64::INFINITY);
                nodes.push(crossing_node(p, &dense, th, prev_loss, c));
                break FlowOutcome::LossThreshold;
            }
        }
        let speed = ode.derivative().norm();
        nodes.push(node);
        if stop.stationarity_threshold.is_some_and(|s| speed <= s) {
            break FlowOutcome::Stationary;
        }
        if ode.t() >= stop.t_max {
            break FlowOutcome::TimeLimit;
        }
    };
    Ok(FlowTrajectory {
        c,
        nodes,
        outcome,
        renormalizations,
        rhs_evals: ode.rhs_evals(),
    })
}

/// Locates the loss-threshold crossing inside an accepted step by bisection on the interpolant.
fn crossing_node(p: &LinearProblem, dense: &DenseStep, th: f64, prev_loss: f64, c: f64) -> FlowNode {
    let loss_at = |t: f64| {
        let (g, w) = unpack(&dense.eval(t));
        p.loss_of(&(w * g))
    };
    let (mut lo, mut hi) = (dense.t0, dense.t1());
    if prev_loss > th {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if loss_at(mid) > th {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let (g, w) = unpack(&dense.eval(hi));
    make_node(p, hi, g, w, c)
}

/// Conserved quantity `‖w⊥‖·exp(g²/2c)`.
pub fn invariant_value(p: &LinearProblem, s: &FlowState) -> Result<f64> {
    if !(s.c > 0.0) {
        return Err(Error::CNotPositive);
    }
    p.check_len(&s.w)?;
    Ok(p.perp(&s.w).norm() * (s.g * s.g / (2.0 * s.c)).exp())
}

/// Limit of the flow from `(g0, w0)` with `g0 > 0`, assuming zero loss is reached with `g` positive.
///
/// The limiting scale `g∞` satisfies `g∞² = g*² + g∞² exp((g0² − g∞²)/c) ‖w0⊥‖²`
/// and the limit is `x* + g∞ exp((g0² − g∞²)/2c) w0⊥`.
pub fn predict_limit(p: &LinearProblem, sol: &MinNormSolution, g0: f64, w0: &DVector<f64>, c: f64) -> Result<DVector<f64>> {
    if !(c > 0.0) {
        return Err(Error::CNotPositive);
    }
    let w0_perp = p.decompose(w0)?.perp;
    let q = w0_perp.norm_squared();
    if q == 0.0 {
        return Ok(sol.x_star.clone());
    }
    let s = limiting_scale_squared(sol.g_star, g0, q, c);
    Ok(&sol.x_star + w0_perp * (s.sqrt() * ((g0 * g0 - s) / (2.0 * c)).exp()))
}

/// `g∞²`, the unique root of `s(1 − q exp((g0² − s)/c)) = g*²` with `‖w∞⊥‖ ≤ 1`.
pub fn limiting_scale_squared(g_star: f64, g0: f64, q: f64, c: f64) -> f64 {
    let target = g_star * g_star;
    let psi = |s: f64| s * (1.0 - q * ((g0 * g0 - s) / c).exp()) - target;
    let mut lo = (g0 * g0 + c * q.ln()).max(0.0);
    let mut hi = lo.max(target) + 1.0;
    while psi(hi) <= 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `x* + g* exp((g0² − g*²)/2c) w0⊥`, which replaces the limiting scale by `g*`.
pub fn closed_form_limit(p: &LinearProblem, sol: &MinNormSolution, g0: f64, w0: &DVector<f64>, c: f64) -> Result<DVector<f64>> {
    if !(c > 0.0) {
        return Err(Error::CNotPositive);
    }
    let w0_perp = p.decompose(w0)?.perp;
    let gs = sol.g_star;
    Ok(&sol.x_star + w0_perp * (gs * ((g0 * g0 - gs * gs) / (2.0 * c)).exp()))
}

/// `‖y‖² > ‖A g0 w0 − y‖²`.
pub fn zero_loss_sufficient(p: &LinearProblem, g0: f64, w0: &DVector<f64>) -> bool {
    p.y().norm_squared() > p.residual_of(&(w0 * g0)).norm_squared()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stationarity {
    GlobalMin,
    SpuriousS,
    NotStationary,
}

pub fn classify_stationary(p: &LinearProblem, s: &FlowState, tol: f64) -> Stationarity {
    let r = p.residual_of(&s.iterate());
    if r.norm() <= tol {
        return Stationarity::GlobalMin;
    }
    let aw = p.a() * &s.w;
    if s.g.abs() <= tol && p.y().dot(&aw).abs() <= tol * p.y().norm() * aw.norm() {
        return Stationarity::SpuriousS;
    }
    Stationarity::NotStationary
}

/// Exact `d(½‖r‖²)/dt = −rᵀA(c wwᵀ + g²𝒫)Aᵀr`.
pub fn loss_rate(p: &LinearProblem, s: &FlowState) -> f64 {
    let u = p.a().transpose() * p.residual_of(&s.iterate());
    rate_from(&s.w, s.g, s.c, &u)
}

pub fn loss_rate_bounds(p: &LinearProblem, s: &FlowState) -> (f64, f64) {
    let u = p.a().transpose() * p.residual_of(&s.iterate());
    bounds_from(s.g, s.c, &u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateBound {
    Time { time: f64, case: u8 },
    Inapplicable,
}

/// Time after which the loss is at most `eps`, from whichever of the two
/// rate bounds applies (the smaller when both do).
pub fn rate_bound_time(p: &LinearProblem, g0: f64, w0: &DVector<f64>, c: f64, eps: f64) -> RateBound {
    let x0 = w0 * g0;
    let f0 = p.loss_of(&x0);
    let log_ratio = (f0 / eps).ln().max(0.0);
    let wperp = p.perp(w0).norm();
    let lmin = p.lambda_min();
    let lmax = p.lambda_max();

    let case1 = {
        let rate = if wperp == 0.0 {
            Some((g0 * g0).min(c))
        } else if g0 * g0 > 2.0 * c * (1.0 / wperp).ln() {
            Some((2.0 * c * wperp.ln() + g0 * g0).min(c))
        } else {
            None
        };
        rate.filter(|&r| r > 0.0).map(|r| log_ratio / (lmin * r))
    };
    let case2 = {
        let delta = (p.y().norm_squared() - p.residual_of(&x0).norm_squared()) / lmax;
        if delta > 0.0 && c > 0.0 {
            let mut t = log_ratio / (lmin * delta.min(c));
            if g0 < delta {
                t += (2.0 - g0 / delta).ln() / lmax;
            }
            Some(t)
        } else {
            None
        }
    };
    match (case1, case2) {
        (Some(a), Some(b)) if b < a => RateBound::Time { time: b, case: 2 },
        (Some(a), _) => RateBound::Time { time: a, case: 1 },
        (None, Some(b)) => RateBound::Time { time: b, case: 2 },
        (None, None) => RateBound::Inapplicable,
    }
}
