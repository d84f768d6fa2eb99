//! Symmetric low-rank matrix sensing: the loss
//! `(1/2m) Σ (⟨A_i, X⟩ − y_i)²` over five parametrizations of `X`.

mod reference;
mod run;

pub use reference::{min_nuclear_reference, NuclearReference};
pub use run::{grid_search, run_sensing, Regime, SensingRun, SensingStop, StepRule};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SeededRng};

#[derive(Debug, Clone)]
pub struct SensingProblem {
    sensors: Vec<DMatrix<f64>>,
    /// Row `i` holds `A_i` flattened column by column.
    stacked: DMatrix<f64>,
    y: DVector<f64>,
    x_star: DMatrix<f64>,
    r: usize,
}

impl SensingProblem {
    /// Builds the problem and its measurements `y_i = ⟨A_i, X*⟩`.
    pub fn from_parts(sensors: Vec<DMatrix<f64>>, x_star: DMatrix<f64>, r: usize) -> Self {
        let d = x_star.nrows();
        let m = sensors.len();
        let mut stacked = DMatrix::zeros(m, d * d);
        for (i, s) in sensors.iter().enumerate() {
            assert_eq!(s.shape(), (d, d), "sensor {i} has the wrong shape");
            for (k, v) in s.as_slice().iter().enumerate() {
                stacked[(i, k)] = *v;
            }
        }
        let y = &stacked * DVector::from_column_slice(x_star.as_slice());
        Self {
            sensors,
            stacked,
            y,
            x_star,
            r,
        }
    }

    pub fn d(&self) -> usize {
        self.x_star.nrows()
    }

    pub fn m(&self) -> usize {
        self.sensors.len()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn sensors(&self) -> &[DMatrix<f64>] {
        &self.sensors
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x_star(&self) -> &DMatrix<f64> {
        &self.x_star
    }

    /// `(⟨A_i, X⟩)_i`.
    pub fn measure(&self, x: &DMatrix<f64>) -> DVector<f64> {
        &self.stacked * DVector::from_column_slice(x.as_slice())
    }

    /// Returns `(G, loss)` with `G = (1/m) Σ (⟨A_i, X⟩ − y_i) A_i`, the gradient in `X`.
    pub fn loss_and_gradient(&self, x: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let m = self.m() as f64;
        let res = self.measure(x) - &self.y;
        let flat = self.stacked.tr_mul(&res) / m;
        let d = self.d();
        (0.5 * res.norm_squared() / m, DMatrix::from_column_slice(d, d, flat.as_slice()))
    }
}

pub fn sensing_loss(sp: &SensingProblem, x: &DMatrix<f64>) -> f64 {
    let res = sp.measure(x) - sp.y();
    0.5 * res.norm_squared() / sp.m() as f64
}

/// Sum of singular values.
pub fn nuclear_norm(x: &DMatrix<f64>) -> f64 {
    x.clone().svd(false, false).singular_values.sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parametrization {
    /// `X = UUᵀ`.
    PlainU,
    /// `X = g WWᵀ`, `‖W‖_F = 1`.
    Scaled,
    /// `X = g WWᵀ/‖W‖_F²`.
    WnScaled,
    /// `X = W D Wᵀ`, unit columns.
    Diag,
    /// `X = Ŵ D Ŵᵀ`, `Ŵ` the column-normalized `W`.
    WnDiag,
}

impl Parametrization {
    pub const ALL: [Parametrization; 5] = [Parametrization::PlainU, Parametrization::WnScaled, Parametrization::WnDiag, Parametrization::Scaled, Parametrization::Diag];

    /// Method label used in reports.
    pub fn method_name(self) -> &'static str {
        match self {
            Parametrization::PlainU => "gd",
            Parametrization::Scaled => "rpgd",
            Parametrization::WnScaled => "wn",
            Parametrization::Diag => "rpgd_diag",
            Parametrization::WnDiag => "wn_diag",
        }
    }

    pub fn from_method_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.method_name() == s)
    }

    fn scale_len(self, d: usize) -> usize {
        match self {
            Parametrization::PlainU => 0,
            Parametrization::Scaled | Parametrization::WnScaled => 1,
            Parametrization::Diag | Parametrization::WnDiag => d,
        }
    }
}

/// Factor matrix plus scale parameters (`g` as a length-1 vector, or the diagonal of `D`).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorState {
    pub kind: Parametrization,
    pub factor: DMatrix<f64>,
    pub scale: DVector<f64>,
}

fn column_normalized(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = w.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let n = col.norm();
        if n < crate::optimizers::NORM_FLOOR {
            return Err(Error::ZeroColumn(j));
        }
        col /= n;
    }
    Ok(out)
}

impl FactorState {
    pub fn new(kind: Parametrization, factor: DMatrix<f64>, scale: DVector<f64>) -> Result<Self> {
        if scale.len() != kind.scale_len(factor.ncols()) {
            return Err(Error::Shape(format!("{} scale entries for {:?}", scale.len(), kind)));
        }
        Ok(Self { kind, factor, scale })
    }

    /// Seeded initialization at scale `alpha`: Gaussian `Z` normalized in
    /// Frobenius norm (per column for the diagonal forms); `U0 = αZ0`,
    /// `g0 = α²`, `D0 = α²I`.
    pub fn initial(kind: Parametrization, d: usize, alpha: f64, seed: u64) -> Self {
        let mut rng = SeededRng::new(derive_seed(seed, 4));
        let z = rng.normal_matrix(d, d);
        let z0 = &z / z.norm();
        match kind {
            Parametrization::PlainU => Self { kind, factor: z0 * alpha, scale: DVector::zeros(0) },
            Parametrization::Scaled | Parametrization::WnScaled => Self { kind, factor: z0, scale: DVector::from_element(1, alpha * alpha) },
            Parametrization::Diag | Parametrization::WnDiag => Self {
                kind,
                factor: column_normalized(&z0).expect("Gaussian columns are nonzero"),
                scale: DVector::from_element(d, alpha * alpha),
            },
        }
    }

    pub fn represented(&self) -> Result<DMatrix<f64>> {
        let w = &self.factor;
        Ok(match self.kind {
            Parametrization::PlainU => w * w.transpose(),
            Parametrization::Scaled => w * w.transpose() * self.scale[0],
            Parametrization::WnScaled => {
                let n2 = w.norm_squared();
                if n2 < crate::optimizers::NORM_FLOOR {
                    return Err(Error::ZeroNorm);
                }
                w * w.transpose() * (self.scale[0] / n2)
            }
            Parametrization::Diag => w * DMatrix::from_diagonal(&self.scale) * w.transpose(),
            Parametrization::WnDiag => {
                let wh = column_normalized(w).map_err(|_| Error::ZeroNorm)?;
                &wh * DMatrix::from_diagonal(&self.scale) * wh.transpose()
            }
        })
    }
}

/// Gradients of `sensing_loss(X(θ))` in the factor and in the scale parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorGradient {
    pub factor: DMatrix<f64>,
    pub scale: DVector<f64>,
    pub loss: f64,
}

pub fn factor_gradients(sp: &SensingProblem, s: &FactorState) -> Result<FactorGradient> {
    let x = s.represented()?;
    let (loss, g) = sp.loss_and_gradient(&x);
    let gs = (&g + g.transpose()) * 0.5;
    let w = &s.factor;
    let (factor, scale) = match s.kind {
        Parametrization::PlainU => (&gs * w * 2.0, DVector::zeros(0)),
        Parametrization::Scaled => {
            let wwt = w * w.transpose();
            (&gs * w * (2.0 * s.scale[0]), DVector::from_element(1, g.dot(&wwt)))
        }
        Parametrization::WnScaled => {
            let n2 = w.norm_squared();
            let inner = gs.dot(&(w * w.transpose()));
            let dg = inner / n2;
            let dw = (&gs * w - w * (inner / n2)) * (2.0 * s.scale[0] / n2);
            (dw, DVector::from_element(1, dg))
        }
        Parametrization::Diag => {
            let gw = &g * w;
            let dd = DVector::from_iterator(w.ncols(), (0..w.ncols()).map(|j| w.column(j).dot(&gw.column(j))));
            (&gs * w * DMatrix::from_diagonal(&s.scale) * 2.0, dd)
        }
        Parametrization::WnDiag => {
            let mut dw = DMatrix::zeros(w.nrows(), w.ncols());
            let mut dd = DVector::zeros(w.ncols());
            for j in 0..w.ncols() {
                let col = w.column(j);
                let n = col.norm();
                if n < crate::optimizers::NORM_FLOOR {
                    return Err(Error::ZeroNorm);
                }
                let wh = col / n;
                let gw = &g * &wh;
                dd[j] = wh.dot(&gw);
                let q = &gs * &wh * (2.0 * s.scale[j]);
                let proj = &q - &wh * wh.dot(&q);
                dw.set_column(j, &(proj / n));
            }
            (dw, dd)
        }
    };
    Ok(FactorGradient { factor, scale, loss })
}

pub fn gd_sensing_step(sp: &SensingProblem, u: &DMatrix<f64>, eta: f64) -> DMatrix<f64> {
    let (_, g) = sp.loss_and_gradient(&(u * u.transpose()));
    let gs = (&g + g.transpose()) * 0.5;
    u - &gs * u * (2.0 * eta)
}

fn expect_kind(s: &FactorState, kind: Parametrization) -> Result<()> {
    if s.kind != kind {
        return Err(Error::Precondition(format!("expected a {:?} state, got {:?}", kind, s.kind)));
    }
    Ok(())
}

/// Projected step on `X = gWWᵀ`: the factor step is renormalized to unit Frobenius norm.
pub fn rpgd_sensing_step(sp: &SensingProblem, s: &FactorState, eta: f64, gamma: f64) -> Result<FactorState> {
    expect_kind(s, Parametrization::Scaled)?;
    apply_step(s, &factor_gradients(sp, s)?, eta, gamma)
}

/// Projected step on `X = WDWᵀ`: every column of the factor step is renormalized.
pub fn rpgd_diag_step(sp: &SensingProblem, s: &FactorState, eta: f64, gamma: f64) -> Result<FactorState> {
    expect_kind(s, Parametrization::Diag)?;
    apply_step(s, &factor_gradients(sp, s)?, eta, gamma)
}

pub fn wn_sensing_step(sp: &SensingProblem, s: &FactorState, eta: f64, gamma: f64) -> Result<FactorState> {
    expect_kind(s, Parametrization::WnScaled)?;
    apply_step(s, &factor_gradients(sp, s)?, eta, gamma)
}

pub fn wn_diag_sensing_step(sp: &SensingProblem, s: &FactorState, eta: f64, gamma: f64) -> Result<FactorState> {
    expect_kind(s, Parametrization::WnDiag)?;
    apply_step(s, &factor_gradients(sp, s)?, eta, gamma)
}

/// One step of the method matching the state's parametrization, from gradients evaluated at `s`.
pub fn apply_step(s: &FactorState, grad: &FactorGradient, eta: f64, gamma: f64) -> Result<FactorState> {
    let v = &s.factor - &grad.factor * eta;
    let factor = match s.kind {
        Parametrization::Scaled => {
            let n = v.norm();
            if n < crate::optimizers::NORM_FLOOR {
                return Err(Error::ZeroProjection);
            }
            v / n
        }
        Parametrization::Diag => column_normalized(&v)?,
        Parametrization::PlainU | Parametrization::WnScaled | Parametrization::WnDiag => v,
    };
    Ok(FactorState {
        kind: s.kind,
        factor,
        scale: &s.scale - &grad.scale * gamma,
    })
}

pub fn sensing_step(sp: &SensingProblem, s: &FactorState, eta: f64, gamma: f64) -> Result<FactorState> {
    apply_step(s, &factor_gradients(sp, s)?, eta, gamma)
}
