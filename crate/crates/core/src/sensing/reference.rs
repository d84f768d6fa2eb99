//! Minimum nuclear norm symmetric matrix consistent with the measurements,
//! by Douglas–Rachford splitting between eigenvalue soft-thresholding and
//! the affine projection onto `{X : ⟨A_i, X⟩ = y_i}`.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use super::{nuclear_norm, SensingProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct NuclearReference {
    pub x: DMatrix<f64>,
    pub nuclear: f64,
    /// `‖(⟨A_i, X⟩ − y_i)_i‖`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct AffineProjector {
    b: DMatrix<f64>,
    /// Pseudo-inverse of `BBᵀ`, so redundant but consistent sensors are allowed.
    gram_pinv: DMatrix<f64>,
    y: DVector<f64>,
    d: usize,
}

impl AffineProjector {
    fn new(sp: &SensingProblem) -> Result<Self> {
        let d = sp.d();
        let mut b = DMatrix::zeros(sp.m(), d * d);
        for (i, a) in sp.sensors().iter().enumerate() {
            let s = (a + a.transpose()) * 0.5;
            for (k, v) in s.as_slice().iter().enumerate() {
                b[(i, k)] = *v;
            }
        }
        let gram = &b * b.transpose();
        let svd = SVD::new(gram, true, true);
        let cutoff = 1e-12 * svd.singular_values.max();
        if !(cutoff > 0.0) {
            return Err(Error::Precondition("all symmetrized sensors vanish".into()));
        }
        let gram_pinv = svd.pseudo_inverse(cutoff).map_err(|e| Error::Precondition(e.to_string()))?;
        Ok(Self { b, gram_pinv, y: sp.y().clone(), d })
    }

    fn residual(&self, x: &DMatrix<f64>) -> DVector<f64> {
        &self.b * DVector::from_column_slice(x.as_slice()) - &self.y
    }

    fn project(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let coeff = &self.gram_pinv * self.residual(x);
        let corr = self.b.transpose() * coeff;
        x - DMatrix::from_column_slice(self.d, self.d, corr.as_slice())
    }
}

fn soft_threshold_eigen(x: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let sym = (x + x.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let shrunk = eig.eigenvalues.map(|l| l.signum() * (l.abs() - tau).max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&shrunk) * eig.eigenvectors.transpose()
}

/// Runs until the two splitting iterates agree to `tol` (relative to `‖X‖_F`)
/// or `max_iter` is reached. The returned matrix is the feasible iterate.
pub fn min_nuclear_reference(sp: &SensingProblem, tol: f64, max_iter: usize) -> Result<NuclearReference> {
    let proj = AffineProjector::new(sp)?;
    let d = sp.d();
    let start = proj.project(&DMatrix::zeros(d, d));
    let tau = start.norm() / (d as f64).sqrt() * 0.1;
    let mut z = start;
    let mut feasible = z.clone();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let x = soft_threshold_eigen(&z, tau);
        feasible = proj.project(&(&x * 2.0 - &z));
        let gap = (&feasible - &x).norm();
        z += &feasible - &x;
        if gap <= tol * x.norm().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(NuclearReference {
        nuclear: nuclear_norm(&feasible),
        residual: proj.residual(&feasible).norm(),
        x: feasible,
        iterations,
        converged,
    })
}
