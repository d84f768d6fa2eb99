//! Dormand–Prince 5(4) integrator with PI step-size control and the
//! standard fourth-order continuous extension for dense output.

use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-10, rel: 1e-10 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN_INV: f64 = 1.0 / 0.2;
const FAC_MAX_INV: f64 = 1.0 / 10.0;

/// Interpolant over one accepted step.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    rcont: [DVector<f64>; 5],
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let [r0, r1, r2, r3, r4] = &self.rcont;
        r0 + (r1 + (r2 + (r3 + r4 * s1) * s) * s1) * s
    }
}

pub struct Dopri5<F> {
    f: F,
    t: f64,
    y: DVector<f64>,
    k1: DVector<f64>,
    h: f64,
    h_max: f64,
    facold: f64,
    tol: Tolerance,
    rhs_evals: usize,
    rejected: usize,
}

impl<F> Dopri5<F>
where
    F: FnMut(f64, &DVector<f64>) -> DVector<f64>,
{
    pub fn new(mut f: F, t0: f64, y0: DVector<f64>, tol: Tolerance, h_max: f64) -> Self {
        let k1 = f(t0, &y0);
        let mut me = Self {
            f,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            h_max,
            facold: 1e-4,
            tol,
            rhs_evals: 1,
            rejected: 0,
        };
        me.h = me.initial_step();
        me
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn derivative(&self) -> &DVector<f64> {
        &self.k1
    }

    pub fn rhs_evals(&self) -> usize {
        self.rhs_evals
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    /// Replaces the current state (e.g. after a projection) and refreshes the stored derivative.
    pub fn reset_state(&mut self, y: DVector<f64>) {
        self.k1 = (self.f)(self.t, &y);
        self.rhs_evals += 1;
        self.y = y;
    }

    fn weighted_rms(&self, v: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let n = v.len().max(1) as f64;
        let sum: f64 = v
            .iter()
            .zip(a.iter().zip(b.iter()))
            .map(|(vi, (ai, bi))| {
                let sk = self.tol.abs + self.tol.rel * ai.abs().max(bi.abs());
                (vi / sk).powi(2)
            })
            .sum();
        (sum / n).sqrt()
    }

    fn initial_step(&mut self) -> f64 {
        let dnf = self.weighted_rms(&self.k1, &self.y, &self.y);
        let dny = self.weighted_rms(&self.y, &self.y, &self.y);
        let mut h = if dnf <= 1e-5 || dny <= 1e-5 { 1e-6 } else { 0.01 * dny / dnf };
        h = h.min(self.h_max);
        let y1 = &self.y + &self.k1 * h;
        let f1 = (self.f)(self.t + h, &y1);
        self.rhs_evals += 1;
        let der2 = self.weighted_rms(&(f1 - &self.k1), &self.y, &self.y) / h;
        let der12 = der2.abs().max(dnf);
        let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
        (100.0 * h).min(h1).min(self.h_max)
    }

    /// Takes one accepted step that does not pass `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<DenseStep> {
        let n = self.y.len();
        loop {
            if self.h.abs() < 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::ToleranceNotMet { time: self.t });
            }
            let h = self.h.min(t_limit - self.t);
            let t = self.t;
            let y = &self.y;
            let k1 = &self.k1;
            let f = &mut self.f;
            let k2 = f(t + C2 * h, &(y + k1 * (h * A21)));
            let k3 = f(t + C3 * h, &(y + (k1 * A31 + &k2 * A32) * h));
            let k4 = f(t + C4 * h, &(y + (k1 * A41 + &k2 * A42 + &k3 * A43) * h));
            let k5 = f(t + C5 * h, &(y + (k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54) * h));
            let k6 = f(t + h, &(y + (k1 * A61 + &k2 * A62 + &k3 * A63 + &k4 * A64 + &k5 * A65) * h));
            let y_new = y + (k1 * A71 + &k3 * A73 + &k4 * A74 + &k5 * A75 + &k6 * A76) * h;
            let k7 = f(t + h, &y_new);
            self.rhs_evals += 6;
            let err_vec = (k1 * E1 + &k3 * E3 + &k4 * E4 + &k5 * E5 + &k6 * E6 + &k7 * E7) * h;
            let err = self.weighted_rms(&err_vec, &self.y, &y_new);
            let finite = err.is_finite() && y_new.iter().all(|v| v.is_finite());
            let fac11 = if finite { err.powf(EXPO1) } else { f64::INFINITY };
            if finite && err <= 1.0 {
                let mut fac = fac11 / self.facold.powf(BETA);
                fac = FAC_MAX_INV.max(FAC_MIN_INV.min(fac / SAFE));
                let h_next = (h / fac).min(self.h_max);
                self.facold = err.max(1e-4);
                let ydiff = &y_new - &self.y;
                let bspl = &self.k1 * h - &ydiff;
                let r3 = &ydiff - &k7 * h - &bspl;
                let r4 = (&self.k1 * D1 + &k3 * D3 + &k4 * D4 + &k5 * D5 + &k6 * D6 + &k7 * D7) * h;
                let dense = DenseStep {
                    t0: t,
                    h,
                    rcont: [self.y.clone(), ydiff, bspl, r3, r4],
                };
                debug_assert_eq!(dense.rcont[0].len(), n);
                self.t = if t_limit - (t + h) <= 0.0 { t_limit } else { t + h };
                self.y = y_new;
                self.k1 = k7;
                // Keep the controller's proposal when the step was clipped by t_limit.
                self.h = if h < self.h { self.h } else { h_next };
                return Ok(dense);
            }
            self.rejected += 1;
            let shrink = if finite { FAC_MIN_INV.min(fac11 / SAFE) } else { 10.0 };
            self.h = h / shrink;
        }
    }
}
