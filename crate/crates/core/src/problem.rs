//! Overparametrized least squares: problem representation, minimum-norm
//! solution and the row-space / null-space split of a vector.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Relative rank tolerance: singular values below `tol * sigma_max` count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// `min ½‖Ax − y‖²` with `A` of shape m×d, m < d, full row rank.
#[derive(Debug, Clone)]
pub struct LinearProblem {
    a: DMatrix<f64>,
    y: DVector<f64>,
    u: DMatrix<f64>,
    singular_values: DVector<f64>,
    row_basis: DMatrix<f64>,
    lambda_min: f64,
    lambda_max: f64,
}

/// Minimum-norm solution together with its polar form `x* = g* w*`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinNormSolution {
    pub x_star: DVector<f64>,
    pub g_star: f64,
    pub w_star: DVector<f64>,
}

impl MinNormSolution {
    pub fn from_vector(x_star: DVector<f64>) -> Self {
        let g_star = x_star.norm();
        let w_star = &x_star / g_star;
        Self {
            x_star,
            g_star,
            w_star,
        }
    }
}

/// `z = parallel + perp` with `A·perp = 0` and `parallel` in the row space.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub parallel: DVector<f64>,
    pub perp: DVector<f64>,
}

pub fn build_problem(a: DMatrix<f64>, y: DVector<f64>) -> Result<LinearProblem> {
    LinearProblem::new(a, y)
}

impl LinearProblem {
    pub fn new(a: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        Self::with_rank_tolerance(a, y, DEFAULT_RANK_TOL)
    }

    pub fn with_rank_tolerance(a: DMatrix<f64>, y: DVector<f64>, rank_tol: f64) -> Result<Self> {
        let (m, d) = a.shape();
        if m == 0 || m >= d {
            return Err(Error::Shape(format!(
                "feature matrix must have fewer rows than columns, got {m}x{d}"
            )));
        }
        if y.len() != m {
            return Err(Error::Shape(format!(
                "target has length {}, expected {m}",
                y.len()
            )));
        }
        if y.iter().all(|&v| v == 0.0) {
            return Err(Error::DegenerateTarget);
        }
        let svd = SVD::new(a.clone(), true, true);
        let u = svd.u.expect("left singular vectors requested");
        let v_t = svd.v_t.expect("right singular vectors requested");
        let singular_values = svd.singular_values;
        let largest = singular_values.max();
        let smallest = singular_values.min();
        let threshold = rank_tol * largest;
        if !(largest > 0.0) || smallest < threshold {
            return Err(Error::RankDeficient {
                smallest,
                threshold,
            });
        }
        Ok(Self {
            a,
            y,
            u,
            row_basis: v_t.transpose(),
            lambda_min: smallest * smallest,
            lambda_max: largest * largest,
            singular_values,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn d(&self) -> usize {
        self.a.ncols()
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    /// Orthonormal basis of the row space (d×m, right singular vectors).
    pub fn row_basis(&self) -> &DMatrix<f64> {
        &self.row_basis
    }

    /// Smallest eigenvalue of `AAᵀ`.
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Largest eigenvalue of `AAᵀ`.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn min_norm_solution(&self) -> MinNormSolution {
        let mut coeffs = self.u.transpose() * &self.y;
        for (c, s) in coeffs.iter_mut().zip(self.singular_values.iter()) {
            *c /= s;
        }
        MinNormSolution::from_vector(&self.row_basis * coeffs)
    }

    pub fn decompose(&self, z: &DVector<f64>) -> Result<Decomposition> {
        self.check_len(z)?;
        let parallel = self.project_row_space(z);
        let perp = z - &parallel;
        Ok(Decomposition { parallel, perp })
    }

    pub(crate) fn project_row_space(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.row_basis * (self.row_basis.transpose() * z)
    }

    pub(crate) fn perp(&self, z: &DVector<f64>) -> DVector<f64> {
        z - self.project_row_space(z)
    }

    /// `y − Ax`.
    pub fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(x)?;
        Ok(self.residual_of(x))
    }

    pub fn loss(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.loss_of(x))
    }

    pub(crate) fn residual_of(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.y - &self.a * x
    }

    pub(crate) fn loss_of(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.residual_of(x).norm_squared()
    }

    /// `Aᵀ(Ax − y)`, the gradient of the loss at `x`.
    pub(crate) fn loss_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        -(self.a.transpose() * self.residual_of(x))
    }

    /// Same problem with `A` and `y` divided by the largest singular value,
    /// so that `λ_max(AAᵀ) = 1`. The solution set is unchanged.
    pub fn rescaled(&self) -> LinearProblem {
        let s = self.singular_values.max();
        let mut out = self.clone();
        out.a /= s;
        out.y /= s;
        out.singular_values /= s;
        out.lambda_min /= s * s;
        out.lambda_max = 1.0;
        out
    }

    /// Whether `AAᵀ = I` entrywise to `tol`.
    pub fn has_orthonormal_rows(&self, tol: f64) -> bool {
        let gram = &self.a * self.a.transpose();
        let eye = DMatrix::<f64>::identity(self.m(), self.m());
        (gram - eye).amax() <= tol
    }

    pub(crate) fn check_len(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.d() {
            return Err(Error::Shape(format!(
                "vector has length {}, expected {}",
                z.len(),
                self.d()
            )));
        }
        Ok(())
    }
}
