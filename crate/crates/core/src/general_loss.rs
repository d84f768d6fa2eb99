//! Weight-normalized flow for losses whose gradient lies in a fixed
//! subspace `range(P)`:
//!
//! ```text
//! dg/dt = −c vᵀ∇L(gv),   dw/dt = −(g/‖w‖)(I − vvᵀ)∇L(gv),   v = w/‖w‖.
//! ```
//!
//! `‖w‖` is conserved and `w⊥(t) = exp((g0² − g²)/(2c‖w0‖²)) w0⊥`.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::ode::{Dopri5, Tolerance};
use crate::problem::{LinearProblem, DEFAULT_RANK_TOL};
use crate::rng::SeededRng;

/// A loss registered with the projector onto the subspace holding its gradients.
pub trait LowDimLoss: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn projector(&self) -> &DMatrix<f64>;
}

fn row_space_projector(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = SVD::new(a.clone(), false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let top = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > DEFAULT_RANK_TOL * top).collect();
    let basis = vt.select_rows(&keep);
    basis.transpose() * basis
}

/// `L(x) = Σ log(1 + exp(−ℓ_i a_iᵀx))`.
#[derive(Debug, Clone)]
pub struct LogisticLoss {
    a: DMatrix<f64>,
    labels: DVector<f64>,
    projector: DMatrix<f64>,
}

pub fn logistic_loss(a: DMatrix<f64>, labels: DVector<f64>) -> Result<LogisticLoss> {
    if labels.len() != a.nrows() {
        return Err(Error::Shape(format!("{} labels for {} rows", labels.len(), a.nrows())));
    }
    if labels.iter().any(|&l| l != 1.0 && l != -1.0) {
        return Err(Error::Shape("labels must be +1 or -1".into()));
    }
    let projector = row_space_projector(&a);
    Ok(LogisticLoss { a, labels, projector })
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LowDimLoss for LogisticLoss {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let margins = &self.a * x;
        margins.iter().zip(self.labels.iter()).map(|(z, l)| softplus(-l * z)).sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let margins = &self.a * x;
        let coeffs = DVector::from_iterator(margins.len(), margins.iter().zip(self.labels.iter()).map(|(z, l)| -l * sigmoid(-l * z)));
        self.a.transpose() * coeffs
    }

    fn projector(&self) -> &DMatrix<f64> {
        &self.projector
    }
}

/// `½‖Ax − y‖²` viewed as a general loss.
#[derive(Debug, Clone)]
pub struct QuadraticLoss {
    problem: LinearProblem,
    projector: DMatrix<f64>,
}

pub fn quadratic_loss(problem: &LinearProblem) -> QuadraticLoss {
    let v = problem.row_basis();
    QuadraticLoss {
        projector: v * v.transpose(),
        problem: problem.clone(),
    }
}

impl LowDimLoss for QuadraticLoss {
    fn dim(&self) -> usize {
        self.problem.d()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.problem.loss_of(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.problem.loss_gradient(x)
    }

    fn projector(&self) -> &DMatrix<f64> {
        &self.projector
    }
}

/// Largest `‖(I − P)∇L(x)‖ / ‖∇L(x)‖` over `samples` Gaussian points.
pub fn assumption_residual(loss: &dyn LowDimLoss, samples: usize, seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = rng.normal_vector(loss.dim());
        let grad = loss.gradient(&x);
        let n = grad.norm();
        if n > 0.0 {
            let off = &grad - loss.projector() * &grad;
            worst = worst.max(off.norm() / n);
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralFlowNode {
    pub time: f64,
    pub g: f64,
    pub w: DVector<f64>,
    pub value: f64,
    pub wperp_norm: f64,
    /// `‖w⊥‖·exp(g²/(2c‖w0‖²))`.
    pub invariant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralFlowReport {
    pub c: f64,
    pub w0_norm: f64,
    pub nodes: Vec<GeneralFlowNode>,
    /// Largest relative change of the conserved quantity.
    pub invariant_drift: f64,
    /// Largest relative change of `‖w‖`.
    pub norm_drift: f64,
    pub renormalizations: usize,
}

fn general_rhs(loss: &dyn LowDimLoss, g: f64, w: &DVector<f64>, c: f64) -> (f64, DVector<f64>) {
    let n = w.norm();
    let v = w / n;
    let grad = loss.gradient(&(&v * g));
    let vg = v.dot(&grad);
    (-c * vg, (grad - v * vg) * (-g / n))
}

/// Integrates the general flow from `(g0, w0)` up to `t_max`.
pub fn wn_flow_general(loss: &dyn LowDimLoss, g0: f64, w0: &DVector<f64>, c: f64, t_max: f64, tol: Tolerance) -> Result<GeneralFlowReport> {
    if !(c > 0.0) {
        return Err(Error::CNotPositive);
    }
    let d = loss.dim();
    if w0.len() != d {
        return Err(Error::Shape(format!("direction has length {}, expected {d}", w0.len())));
    }
    let w0_norm = w0.norm();
    if !(w0_norm > 0.0) {
        return Err(Error::ZeroDirection);
    }
    let residual = assumption_residual(loss, 8, 0);
    if residual > 1e-10 {
        return Err(Error::Precondition(format!("gradient leaves the registered subspace (relative residual {residual:e})")));
    }
    let complement = DMatrix::<f64>::identity(d, d) - loss.projector();
    let node = |time: f64, g: f64, w: DVector<f64>| {
        let wperp_norm = (&complement * &w).norm();
        GeneralFlowNode {
            time,
            value: loss.value(&(&w * (g / w.norm()))),
            invariant: wperp_norm * (g * g / (2.0 * c * w0_norm * w0_norm)).exp(),
            wperp_norm,
            g,
            w,
        }
    };
    let pack = |g: f64, w: &DVector<f64>| {
        let mut y = DVector::zeros(d + 1);
        y[0] = g;
        y.rows_mut(1, d).copy_from(w);
        y
    };
    let rhs = |_t: f64, y: &DVector<f64>| {
        let w = y.rows(1, d).into_owned();
        let (dg, dw) = general_rhs(loss, y[0], &w, c);
        pack(dg, &dw)
    };
    let mut ode = Dopri5::new(rhs, 0.0, pack(g0, w0), tol, f64::INFINITY);
    let mut nodes = vec![node(0.0, g0, w0.clone())];
    let mut renormalizations = 0;
    while ode.t() < t_max {
        ode.step(t_max)?;
        let y = ode.y();
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: nodes.len() });
        }
        let g = y[0];
        let mut w = y.rows(1, d).into_owned();
        let n = w.norm();
        if (n / w0_norm - 1.0).abs() > crate::flow::RENORMALIZE_DRIFT {
            w *= w0_norm / n;
            ode.reset_state(pack(g, &w));
            renormalizations += 1;
        }
        nodes.push(node(ode.t(), g, w));
    }
    let i0 = nodes[0].invariant;
    let invariant_drift = nodes.iter().map(|n| (n.invariant / i0 - 1.0).abs()).fold(0.0, f64::max);
    let norm_drift = nodes.iter().map(|n| (n.w.norm() / w0_norm - 1.0).abs()).fold(0.0, f64::max);
    Ok(GeneralFlowReport {
        c,
        w0_norm,
        nodes,
        invariant_drift,
        norm_drift,
        renormalizations,
    })
}
