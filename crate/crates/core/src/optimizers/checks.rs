//! Per-step checks of the closed-form identities that hold for projected
//! steps with the optimal direction stepsize, and of the fixed-scale bound
//! for general feature matrices.

use super::{Method, Trajectory};
use crate::error::{Error, Result};
use crate::problem::{LinearProblem, MinNormSolution};

/// Maximum absolute residuals over all checked steps.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IdentityReport {
    /// `A w_{t+1} = y / (g_t ‖v_t‖)`, max-norm.
    pub aligned_image: f64,
    /// `g_t²‖v_t‖² = g_t² + g*² − ‖A g_t w_t‖²`.
    pub step_norm: f64,
    /// `‖Aw_{t+1}‖² = g*² / (g*² + g_t²(1 − ‖Aw_t‖²))`.
    pub image_norm: f64,
    /// `1 − ‖Aw_{t+1}‖² = (1 − ‖Aw_t‖²)/‖v_t‖²`.
    pub null_shrink: f64,
    /// `g_{t+1}² − ‖A g_{t+1} w_{t+1}‖² = (‖A g_{t+1} w_{t+1}‖²/g*²)(g_t² − ‖A g_t w_t‖²)`.
    pub scale_gap: f64,
    /// Largest excess of `‖w_{t+1}⊥‖²` over `(g_t²/g*²)‖w_t⊥‖²` (zero when the bound holds).
    pub contraction_excess: f64,
    /// Steps where `g_t < g_{t−1}‖v_{t−1}‖` and `γ_t > 0` but `g_{t+1} ≤ g_t`.
    pub monotonicity_violations: usize,
    pub steps_checked: usize,
}

impl IdentityReport {
    /// Largest of the equality residuals and the contraction excess.
    pub fn max_residual(&self) -> f64 {
        [self.aligned_image, self.step_norm, self.image_norm, self.null_shrink, self.scale_gap, self.contraction_excess]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn check_orthogonal_identities(p: &LinearProblem, sol: &MinNormSolution, traj: &Trajectory) -> Result<IdentityReport> {
    if !p.has_orthonormal_rows(1e-10) {
        return Err(Error::Precondition("feature matrix rows are not orthonormal to 1e-10".into()));
    }
    let gs2 = sol.g_star * sol.g_star;
    let mut rep = IdentityReport::default();
    let snaps = &traj.snapshots;
    for (k, pair) in snaps.windows(2).enumerate() {
        let (cur, next) = (&pair[0], &pair[1]);
        if cur.method != Method::Rpgd || next.method != Method::Rpgd || next.t != cur.t + 1 {
            continue;
        }
        let Some(step) = cur.step else { continue };
        let v_norm = step.v_norm.expect("projected steps record the pre-projection norm");
        let g = cur.g;
        if g == 0.0 {
            return Err(Error::Precondition(format!("g vanished at step {}", cur.t)));
        }
        if (step.eta * g * g - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition(format!("step {} does not use eta = 1/g^2", cur.t)));
        }
        let aw = p.a() * &cur.w;
        let aw_next = p.a() * &next.w;
        let aw2 = aw.norm_squared();
        let aw2_next = aw_next.norm_squared();
        let target = p.y() / (g * v_norm);
        rep.aligned_image = rep.aligned_image.max((&aw_next - target).amax());
        rep.step_norm = rep.step_norm.max((g * g * v_norm * v_norm - (g * g + gs2 - g * g * aw2)).abs());
        rep.image_norm = rep.image_norm.max((aw2_next - gs2 / (gs2 + g * g * (1.0 - aw2))).abs());
        rep.null_shrink = rep.null_shrink.max(((1.0 - aw2_next) - (1.0 - aw2) / (v_norm * v_norm)).abs());
        let gn = next.g;
        let lhs = gn * gn - gn * gn * aw2_next;
        let rhs = (gn * gn * aw2_next / gs2) * (g * g - g * g * aw2);
        rep.scale_gap = rep.scale_gap.max((lhs - rhs).abs());
        let excess = next.wperp_norm.powi(2) - (g * g / gs2) * cur.wperp_norm.powi(2);
        rep.contraction_excess = rep.contraction_excess.max(excess);
        if k >= 1 {
            let prev = &snaps[k - 1];
            if prev.t + 1 == cur.t && prev.method == Method::Rpgd && step.gamma > 0.0 {
                if let Some(prev_v) = prev.step.and_then(|s| s.v_norm) {
                    if cur.g < prev.g * prev_v && next.g <= cur.g {
                        rep.monotonicity_violations += 1;
                    }
                }
            }
        }
        rep.steps_checked += 1;
    }
    Ok(rep)
}

/// Step counts beyond this are not representable exactly and count as unbounded.
const MAX_EXACT_STEPS: f64 = 9_007_199_254_740_992.0;

/// Length of the fixed-scale phase, `log(‖w0⊥‖/ε)/log(1+δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum T1Bound {
    Finite(f64),
    Unbounded,
}

pub fn t1_general(wperp0: f64, eps: f64, delta: f64) -> T1Bound {
    let denom = delta.ln_1p();
    if !(denom > 0.0) {
        return T1Bound::Unbounded;
    }
    let t = (wperp0 / eps).ln() / denom;
    if t.is_finite() && t <= MAX_EXACT_STEPS {
        T1Bound::Finite(t.max(0.0))
    } else if t == f64::NEG_INFINITY {
        T1Bound::Finite(0.0)
    } else {
        T1Bound::Unbounded
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralBoundReport {
    /// `g* λ_min / (2 + δ)`.
    pub g0_bound: f64,
    /// `(g*/(2+δ)) √((‖AAᵀ‖_F² − 2√(m log m))/m)`, when the radicand is nonnegative.
    pub randomized_g0_bound: Option<f64>,
    pub t1: T1Bound,
    /// Smallest `‖v_t‖` over the fixed-scale steps.
    pub min_v_norm: f64,
    pub v_norm_ok: bool,
    /// First step with `‖w_t⊥‖ ≤ ε` within the fixed-scale phase.
    pub steps_to_eps: Option<usize>,
    pub within_t1: bool,
}

pub fn check_general_matrix_bound(p: &LinearProblem, sol: &MinNormSolution, g0: f64, delta: f64, eps: f64, traj: &Trajectory) -> Result<GeneralBoundReport> {
    if (p.lambda_max() - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition("lambda_max(AA^T) must be 1; rescale the problem first".into()));
    }
    let g0_bound = sol.g_star * p.lambda_min() / (2.0 + delta);
    if g0 > g0_bound {
        return Err(Error::Precondition(format!("g0 = {g0} exceeds g* lambda_min/(2+delta) = {g0_bound}")));
    }
    let m = p.m() as f64;
    let gram = p.a() * p.a().transpose();
    let radicand = (gram.norm_squared() - 2.0 * (m * m.ln()).sqrt()) / m;
    let randomized_g0_bound = (radicand >= 0.0).then(|| sol.g_star / (2.0 + delta) * radicand.sqrt());

    let first = &traj.snapshots[0];
    let wperp0 = p.perp(&first.iterate().normalize()).norm();
    let t1 = t1_general(wperp0, eps, delta);

    let mut min_v_norm = f64::INFINITY;
    let mut steps_to_eps = None;
    for (k, s) in traj.snapshots.iter().enumerate() {
        if s.method == Method::Rpgd {
            if let Some(v) = s.step.and_then(|st| st.v_norm) {
                min_v_norm = min_v_norm.min(v);
            }
        }
        // The state reached by the last fixed-scale step is already recorded as GD.
        let in_phase = s.method == Method::Rpgd || (k > 0 && traj.snapshots[k - 1].method == Method::Rpgd);
        if steps_to_eps.is_none() && in_phase {
            let dir = s.iterate().normalize();
            if p.perp(&dir).norm() <= eps {
                steps_to_eps = Some(s.t);
            }
        }
    }
    let within_t1 = match (steps_to_eps, t1) {
        (Some(k), T1Bound::Finite(t)) => (k as f64) <= t.ceil(),
        _ => false,
    };
    Ok(GeneralBoundReport {
        g0_bound,
        randomized_g0_bound,
        t1,
        min_v_norm,
        v_norm_ok: min_v_norm >= 1.0 + delta,
        steps_to_eps,
        within_t1,
    })
}
