use super::{apply_step, factor_gradients, FactorState, Parametrization, SensingProblem};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `η_t = γ_t = c`.
    Same,
    /// `η_t = c`, `γ_t = c` only after the switch step.
    TwoPhase,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Same => "same",
            Regime::TwoPhase => "two_phase",
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "same" => Ok(Regime::Same),
            "two_phase" | "two-phase" => Ok(Regime::TwoPhase),
            _ => Err(format!("unknown regime `{s}` (expected same or two_phase)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRule {
    pub regime: Regime,
    /// Scale steps are zero for `t <= switch_at` under [`Regime::TwoPhase`].
    pub switch_at: usize,
    /// Multiply both steps of the normalized forms by `‖W‖_F`.
    pub frobenius_scaled_wn: bool,
}

impl StepRule {
    pub fn new(regime: Regime) -> Self {
        Self {
            regime,
            switch_at: 1000,
            frobenius_scaled_wn: true,
        }
    }

    /// `(η_t, γ_t)` for base stepsize `c`.
    pub fn stepsizes(&self, s: &FactorState, c: f64, t: usize) -> (f64, f64) {
        let base = match s.kind {
            Parametrization::WnScaled | Parametrization::WnDiag if self.frobenius_scaled_wn => c * s.factor.norm(),
            _ => c,
        };
        let gamma = match (s.kind, self.regime) {
            (Parametrization::PlainU, _) => 0.0,
            (_, Regime::Same) => base,
            (_, Regime::TwoPhase) if t > self.switch_at => base,
            (_, Regime::TwoPhase) => 0.0,
        };
        (base, gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingStop {
    pub max_steps: usize,
    pub loss_threshold: f64,
    /// Loss above `blowup · max(1, initial loss)` counts as divergence.
    pub blowup: f64,
    /// A run whose best loss has not dropped by 10% over this many steps is
    /// stopped as stalled.
    pub stall_window: usize,
}

impl Default for SensingStop {
    fn default() -> Self {
        Self {
            max_steps: 2_000_000,
            loss_threshold: 1e-6,
            blowup: 1e8,
            stall_window: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SensingRun {
    pub state: FactorState,
    pub c: f64,
    pub steps: usize,
    pub loss: f64,
    pub converged: bool,
    pub diverged: bool,
    pub stalled: bool,
}

pub fn run_sensing(sp: &SensingProblem, init: &FactorState, c: f64, rule: StepRule, stop: SensingStop) -> Result<SensingRun> {
    let mut state = init.clone();
    let mut grad = factor_gradients(sp, &state)?;
    let limit = stop.blowup * grad.loss.max(1.0);
    let mut steps = 0;
    let mut checkpoint = grad.loss;
    let mut best = grad.loss;
    let finish = |state: FactorState, steps, loss: f64, diverged, stalled| SensingRun {
        state,
        c,
        steps,
        loss,
        converged: loss <= stop.loss_threshold,
        diverged,
        stalled,
    };
    loop {
        if grad.loss <= stop.loss_threshold || steps >= stop.max_steps {
            return Ok(finish(state, steps, grad.loss, false, false));
        }
        if stop.stall_window > 0 && steps > 0 && steps % stop.stall_window == 0 {
            if best > 0.9 * checkpoint {
                return Ok(finish(state, steps, grad.loss, false, true));
            }
            checkpoint = best;
        }
        let (eta, gamma) = rule.stepsizes(&state, c, steps);
        let next = apply_step(&state, &grad, eta, gamma).and_then(|n| factor_gradients(sp, &n).map(|g| (n, g)));
        let Ok((next, next_grad)) = next else {
            return Ok(finish(state, steps, grad.loss, true, false));
        };
        steps += 1;
        if !next_grad.loss.is_finite() || next_grad.loss > limit || next.factor.iter().any(|v| !v.is_finite()) {
            return Ok(finish(state, steps, grad.loss, true, false));
        }
        state = next;
        grad = next_grad;
        best = best.min(grad.loss);
    }
}

/// Tries `c = start, start/2, …` (at most `halvings + 1` values) and returns
/// the first run that reaches the loss threshold, or the last run tried.
pub fn grid_search(sp: &SensingProblem, init: &FactorState, rule: StepRule, stop: SensingStop, start: f64, halvings: usize) -> Result<SensingRun> {
    let mut c = start;
    let mut last = None;
    for _ in 0..=halvings {
        let run = run_sensing(sp, init, c, rule, stop)?;
        if run.converged {
            return Ok(run);
        }
        last = Some(run);
        c *= 0.5;
    }
    Ok(last.expect("at least one stepsize is tried"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::gen_sensing;

    #[test]
    fn stepsize_rules() {
        let s = FactorState::initial(Parametrization::WnScaled, 4, 1.0, 0);
        let mut t = s.clone();
        t.factor *= 3.0;
        let rule = StepRule::new(Regime::TwoPhase);
        assert_eq!(rule.stepsizes(&s, 0.1, 5), (0.1 * s.factor.norm(), 0.0));
        assert_eq!(rule.stepsizes(&t, 0.1, 1000).1, 0.0);
        let (eta, gamma) = rule.stepsizes(&t, 0.1, 1001);
        assert!((eta - 0.3).abs() < 1e-12 && (gamma - 0.3).abs() < 1e-12);
        let plain = FactorState::initial(Parametrization::PlainU, 4, 1.0, 0);
        assert_eq!(StepRule::new(Regime::Same).stepsizes(&plain, 0.2, 0), (0.2, 0.0));
        let diag = FactorState::initial(Parametrization::Diag, 4, 1.0, 0);
        assert_eq!(StepRule::new(Regime::Same).stepsizes(&diag, 0.2, 0), (0.2, 0.2));
    }

    #[test]
    fn gd_converges_on_small_instance() {
        let sp = gen_sensing(6, 2, 20, 4).unwrap();
        let init = FactorState::initial(Parametrization::PlainU, 6, 0.5, 1);
        let run = grid_search(&sp, &init, StepRule::new(Regime::Same), SensingStop::default(), 0.5, 12).unwrap();
        assert!(run.converged, "loss {}", run.loss);
        assert!(run.loss <= 1e-6);
    }

    #[test]
    fn oversized_step_diverges() {
        let sp = gen_sensing(6, 2, 20, 4).unwrap();
        let init = FactorState::initial(Parametrization::PlainU, 6, 3.0, 1);
        let run = run_sensing(&sp, &init, 50.0, StepRule::new(Regime::Same), SensingStop::default()).unwrap();
        assert!(run.diverged && !run.converged);
    }
}
