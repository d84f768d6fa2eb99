use nalgebra::DVector;

use super::checks::{t1_general, T1Bound};
use super::Method;
use crate::error::{Error, Result};
use crate::problem::LinearProblem;

/// Stepsize rule for the direction `w` (or for the iterate under GD).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaRule {
    Constant(f64),
    /// `1/(g_t² λ_max)`; multiplied by `‖w_t‖` for WN. Under GD (`g = 1`) this is `1/λ_max`.
    Optimal { lambda_max: f64 },
    /// `value` for `t > after`, zero before.
    Gated { value: f64, after: usize },
}

/// Stepsize rule for the scale `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaRule {
    Constant(f64),
    /// `first` for `t < boundary` and `second` afterwards. With `pin_first`
    /// the very first step uses zero, so `g_1 = g_0`.
    TwoStage { first: f64, second: f64, boundary: usize, pin_first: bool },
    /// `value` for `t > after`, zero before.
    Gated { value: f64, after: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Constant,
    TwoStageA,
    TwoStageB,
    FixedGThenGd,
    OptimalEtaConstantGamma,
    Custom,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Constant => "constant",
            Variant::TwoStageA => "two_stage_a",
            Variant::TwoStageB => "two_stage_b",
            Variant::FixedGThenGd => "fixed_g_then_gd",
            Variant::OptimalEtaConstantGamma => "optimal_eta_constant_gamma",
            Variant::Custom => "custom",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "constant" => Ok(Variant::Constant),
            "two_stage_a" => Ok(Variant::TwoStageA),
            "two_stage_b" => Ok(Variant::TwoStageB),
            "fixed_g_then_gd" => Ok(Variant::FixedGThenGd),
            "optimal_eta_constant_gamma" => Ok(Variant::OptimalEtaConstantGamma),
            other => Err(format!("unknown schedule variant '{other}'")),
        }
    }
}

/// Inputs to [`make_schedule`]. Unused fields are ignored by each variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    pub eta: f64,
    pub gamma: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub gamma2: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            eta: 0.005,
            gamma: 0.005,
            rho: 0.5,
            epsilon: 1e-2,
            delta: None,
            gamma2: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub variant: Variant,
    pub eta: EtaRule,
    pub gamma: GammaRule,
    /// End of the first phase, when the variant has one.
    pub t1: Option<usize>,
    /// Total number of steps prescribed by the theory, when finite.
    pub horizon: Option<usize>,
    /// Step at which the run switches from the reparametrized method to plain GD.
    pub switch_to_gd: Option<usize>,
    /// GD stepsize used after the switch.
    pub gd_eta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl Schedule {
    pub fn custom(eta: EtaRule, gamma: GammaRule) -> Self {
        Self {
            variant: Variant::Custom,
            eta,
            gamma,
            t1: None,
            horizon: None,
            switch_to_gd: None,
            gd_eta: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            rho: 0.0,
            epsilon: 0.0,
            delta: 0.0,
        }
    }

    pub fn constant(eta: f64, gamma: f64) -> Self {
        Self {
            variant: Variant::Constant,
            ..Self::custom(EtaRule::Constant(eta), GammaRule::Constant(gamma))
        }
    }

    pub fn eta_at(&self, method: Method, t: usize, g: f64, w_norm: f64) -> f64 {
        match self.eta {
            EtaRule::Constant(v) => v,
            EtaRule::Optimal { lambda_max } => {
                let base = match method {
                    Method::Gd => 1.0 / lambda_max,
                    _ => 1.0 / (g * g * lambda_max),
                };
                if method == Method::Wn {
                    base * w_norm
                } else {
                    base
                }
            }
            EtaRule::Gated { value, after } => {
                if t > after {
                    value
                } else {
                    0.0
                }
            }
        }
    }

    pub fn gamma_at(&self, t: usize) -> f64 {
        match self.gamma {
            GammaRule::Constant(v) => v,
            GammaRule::TwoStage { first, second, boundary, pin_first } => {
                if pin_first && t == 0 {
                    0.0
                } else if t < boundary {
                    first
                } else {
                    second
                }
            }
            GammaRule::Gated { value, after } => {
                if t > after {
                    value
                } else {
                    0.0
                }
            }
        }
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParams(msg.into()))
}

fn steps(x: f64) -> usize {
    if x.is_finite() && x > 0.0 {
        x.ceil() as usize
    } else {
        0
    }
}

/// Builds one of the stepsize schedules from the theory.
///
/// `w0` is needed by the variants whose constants depend on the initial
/// direction.
pub fn make_schedule(variant: Variant, p: &LinearProblem, g0: f64, w0: &DVector<f64>, params: &ScheduleParams) -> Result<Schedule> {
    p.check_len(w0)?;
    let sol = p.min_norm_solution();
    let g_star = sol.g_star;
    let lambda_max = p.lambda_max();
    let base = Schedule::custom(EtaRule::Optimal { lambda_max }, GammaRule::Constant(0.0));
    match variant {
        Variant::Constant => {
            if !(params.eta > 0.0) || params.gamma < 0.0 {
                return invalid("constant schedule needs eta > 0 and gamma >= 0");
            }
            Ok(Schedule::constant(params.eta, params.gamma))
        }
        Variant::Custom => invalid("custom schedules are built with Schedule::custom"),
        Variant::OptimalEtaConstantGamma => {
            if g0 == 0.0 {
                return invalid("optimal eta 1/g^2 needs g0 != 0 (the theory assumes g0 > 0)");
            }
            if params.gamma < 0.0 {
                return invalid("gamma must be nonnegative");
            }
            Ok(Schedule {
                variant,
                gamma: GammaRule::Constant(params.gamma),
                gamma1: params.gamma,
                ..base
            })
        }
        Variant::TwoStageA | Variant::TwoStageB => {
            if !(g0 > 0.0 && g0 < g_star) {
                return invalid(format!("two-stage schedules need 0 < g0 < g* (g0 = {g0}, g* = {g_star})"));
            }
            if !p.has_orthonormal_rows(1e-10) {
                return invalid("two-stage schedules need a feature matrix with orthonormal rows");
            }
            let eps = params.epsilon;
            if variant == Variant::TwoStageA {
                two_stage_a(p, g0, w0, g_star, params, base)
            } else {
                if !(eps > 0.0 && eps < 0.5) {
                    return invalid(format!("schedule (b) needs 0 < eps < 1/2, got {eps}"));
                }
                let gamma = params.gamma2;
                let bound = (g_star - g0) / ((1.0 - eps * eps) * (g_star - g0) + eps * eps * g_star);
                if !(gamma > 0.0 && gamma < bound && gamma <= 0.25) {
                    return invalid(format!("schedule (b) needs 0 < gamma < {bound} and gamma <= 1/4, got {gamma}"));
                }
                let t1 = steps((1.0 / (eps * eps)).ln() / (g_star * g_star / (g0 * g0)).ln());
                let t2 = steps(
                    ((1.0 - (1.0 - eps * eps) * g0 / g_star) / (eps * eps)).ln() / (1.0 / (1.0 - (1.0 - eps * eps) * gamma)).ln(),
                );
                Ok(Schedule {
                    variant,
                    gamma: GammaRule::TwoStage { first: 0.0, second: gamma, boundary: t1, pin_first: false },
                    t1: Some(t1),
                    horizon: Some(t1 + t2),
                    gamma1: 0.0,
                    gamma2: gamma,
                    epsilon: eps,
                    ..base
                })
            }
        }
        Variant::FixedGThenGd => {
            let Some(delta) = params.delta else {
                return invalid("fixed-g schedule needs delta > 0");
            };
            if !(delta > 0.0) {
                return invalid("fixed-g schedule needs delta > 0");
            }
            if (lambda_max - 1.0).abs() > 1e-10 {
                return invalid("fixed-g schedule needs lambda_max(AA^T) = 1; rescale the problem first");
            }
            let bound = g_star * p.lambda_min() / (2.0 + delta);
            if !(g0 > 0.0 && g0 <= bound) {
                return invalid(format!("fixed-g schedule needs 0 < g0 <= g* lambda_min/(2+delta) = {bound}, got {g0}"));
            }
            let eps = params.epsilon;
            if !(eps > 0.0) {
                return invalid("fixed-g schedule needs eps > 0");
            }
            let wperp = p.perp(&w0.normalize()).norm();
            let t1 = match t1_general(wperp, eps, delta) {
                T1Bound::Finite(t) => steps(t),
                T1Bound::Unbounded => return invalid("phase length is unbounded for this delta"),
            };
            Ok(Schedule {
                variant,
                t1: Some(t1),
                switch_to_gd: Some(t1),
                gd_eta: 1.0 / lambda_max,
                epsilon: eps,
                delta,
                ..base
            })
        }
    }
}

fn two_stage_a(p: &LinearProblem, g0: f64, w0: &DVector<f64>, g_star: f64, params: &ScheduleParams, base: Schedule) -> Result<Schedule> {
    let (rho, eps, gamma2) = (params.rho, params.epsilon, params.gamma2);
    if !(rho > 0.0 && rho <= 1.0) {
        return invalid(format!("schedule (a) needs rho in (0, 1], got {rho}"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("schedule (a) needs 0 < eps < 1, got {eps}"));
    }
    if !(gamma2 > 0.0 && gamma2 <= 0.25) {
        return invalid(format!("schedule (a) needs 0 < gamma2 <= 1/4, got {gamma2}"));
    }
    let delta_max = eps / (2.0 * g_star + eps);
    let delta = params.delta.unwrap_or(0.99 * delta_max);
    if !(delta > 0.0 && delta < delta_max) {
        return invalid(format!("schedule (a) needs 0 < delta < eps/(2g*+eps) = {delta_max}, got {delta}"));
    }
    let aw0 = p.a() * w0;
    let aw0_sq = aw0.norm_squared();
    let fit_sq = g0 * g0 * aw0_sq;
    let delta0 = g_star * g_star - g0 * g0;
    let t1 = steps((1.0 + g_star * g_star / (rho * delta0)) * ((1.0 - aw0_sq) / (delta * delta)).ln());
    let cap = 1.0 / (2.0 * (1.0 + aw0_sq));
    let growth = ((1.0 - rho) * g_star * g_star / (g0 * g0) + rho).ln();
    let gamma1 = if t1 == 0 {
        cap
    } else {
        (fit_sq / (2.0 * t1 as f64 * (g_star * g_star - fit_sq)) * growth).min(cap)
    };
    let gamma1 = if gamma1.abs() < 1e-300 { 0.0 } else { gamma1 };
    let t2 = steps((rho * delta0 / (g_star * g_star * (1.0 - eps) * eps.sqrt())).ln() / gamma2);
    Ok(Schedule {
        variant: Variant::TwoStageA,
        gamma: GammaRule::TwoStage { first: gamma1, second: gamma2, boundary: t1, pin_first: true },
        t1: Some(t1),
        horizon: Some(t1 + t2),
        gamma1,
        gamma2,
        rho,
        epsilon: eps,
        delta,
        ..base
    })
}
