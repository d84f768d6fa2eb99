//! Seeded problem generators.
//!
//! Every generator is a pure function of its arguments. Sub-streams are
//! derived from the seed with [`derive_seed`]: stream 1 feeds the feature
//! matrix, stream 2 the target direction, stream 3 initial directions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{LinearProblem, MinNormSolution};
use crate::rng::{derive_seed, SeededRng};
use crate::sensing::SensingProblem;

const STREAM_MATRIX: u64 = 1;
const STREAM_TARGET: u64 = 2;
const STREAM_INIT: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub m: usize,
    pub d: usize,
    /// Ratio of the extreme singular values of `A`.
    pub kappa: f64,
    pub g_star: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(m: usize, d: usize, kappa: f64, g_star: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            m,
            d,
            kappa,
            g_star,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m >= self.d {
            return Err(Error::InvalidSpec(format!("need 0 < m < d, got m={} d={}", self.m, self.d)));
        }
        if !(self.kappa >= 1.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidSpec(format!("kappa must be >= 1, got {}", self.kappa)));
        }
        if !(self.g_star > 0.0) || !self.g_star.is_finite() {
            return Err(Error::InvalidSpec(format!("g_star must be positive, got {}", self.g_star)));
        }
        Ok(())
    }
}

/// Gaussian vector normalized to the unit sphere.
pub fn random_unit_vector(d: usize, seed: u64) -> DVector<f64> {
    let mut rng = SeededRng::new(seed);
    unit_from(&mut rng, d)
}

fn unit_from(rng: &mut SeededRng, d: usize) -> DVector<f64> {
    loop {
        let z = rng.normal_vector(d);
        let n = z.norm();
        if n > 0.0 {
            return z / n;
        }
    }
}

/// `k` orthonormal rows of length `n` (k ≤ n), from modified Gram–Schmidt
/// with one reorthogonalization pass over seeded Gaussian rows.
pub fn orthonormal_rows(k: usize, n: usize, rng: &mut SeededRng) -> DMatrix<f64> {
    assert!(k <= n, "cannot draw {k} orthonormal rows in dimension {n}");
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v = rng.normal_vector(n);
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v / norm);
        }
    }
    let mut out = DMatrix::zeros(k, n);
    for (i, q) in basis.iter().enumerate() {
        out.set_row(i, &q.transpose());
    }
    out
}

fn target_in_row_space(a: &DMatrix<f64>, spec: &GenSpec) -> Result<(LinearProblem, MinNormSolution)> {
    let mut rng = SeededRng::new(derive_seed(spec.seed, STREAM_TARGET));
    let raw = unit_from(&mut rng, spec.d);
    // Project onto the row space through an orthonormal basis of it.
    let q = orthonormal_basis_of_rows(a);
    let w = &q * (q.transpose() * raw);
    let w_star = &w / w.norm();
    let x_star = &w_star * spec.g_star;
    let y = a * &x_star;
    let problem = LinearProblem::new(a.clone(), y)?;
    Ok((
        problem,
        MinNormSolution {
            x_star,
            g_star: spec.g_star,
            w_star,
        },
    ))
}

fn orthonormal_basis_of_rows(a: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = a.transpose().qr();
    qr.q()
}

/// Feature matrix with orthonormal rows and a target `y = A(g* w*)` with
/// `w*` a random unit vector of the row space.
pub fn gen_orthogonal(spec: &GenSpec) -> Result<(LinearProblem, MinNormSolution)> {
    spec.validate()?;
    let mut rng = SeededRng::new(derive_seed(spec.seed, STREAM_MATRIX));
    let a = orthonormal_rows(spec.m, spec.d, &mut rng);
    target_in_row_space(&a, spec)
}

/// `A = UΣVᵀ` with random orthogonal factors and singular values
/// `1, κ^{-1/(m-1)}, …, 1/κ`.
pub fn gen_conditioned(spec: &GenSpec) -> Result<(LinearProblem, MinNormSolution)> {
    spec.validate()?;
    if spec.m < 2 {
        return Err(Error::InvalidSpec("conditioned generator needs m >= 2".into()));
    }
    let mut rng = SeededRng::new(derive_seed(spec.seed, STREAM_MATRIX));
    let u = orthonormal_rows(spec.m, spec.m, &mut rng);
    let vt = orthonormal_rows(spec.m, spec.d, &mut rng);
    let sigma = conditioned_spectrum(spec.m, spec.kappa);
    let a = u * DMatrix::from_diagonal(&sigma) * vt;
    target_in_row_space(&a, spec)
}

pub fn conditioned_spectrum(m: usize, kappa: f64) -> DVector<f64> {
    let ratio = (1.0 / kappa).powf(1.0 / (m as f64 - 1.0));
    DVector::from_iterator(m, (0..m).map(|i| if i + 1 == m { 1.0 / kappa } else { ratio.powi(i as i32) }))
}

/// Initial unit direction. With `perp_fraction = Some(f)`, `f ∈ [0, 1]`,
/// the result has `‖w⊥‖ = f`; otherwise it is a uniformly random unit vector.
pub fn initial_direction(problem: &LinearProblem, seed: u64, perp_fraction: Option<f64>) -> Result<DVector<f64>> {
    let mut rng = SeededRng::new(derive_seed(seed, STREAM_INIT));
    let w = unit_from(&mut rng, problem.d());
    let Some(f) = perp_fraction else {
        return Ok(w);
    };
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidSpec(format!("perp_fraction must lie in [0, 1], got {f}")));
    }
    let dec = problem.decompose(&w)?;
    let par = dec.parallel.normalize();
    let perp = dec.perp.normalize();
    Ok(par * (1.0 - f * f).sqrt() + perp * f)
}

/// Gaussian sensing operators and a rank-`r` PSD ground truth `X* = ÛÛᵀ`.
pub fn gen_sensing(d: usize, r: usize, m: usize, seed: u64) -> Result<SensingProblem> {
    if r == 0 || r >= d {
        return Err(Error::InvalidSpec(format!("need 0 < r < d, got r={r} d={d}")));
    }
    if m == 0 {
        return Err(Error::InvalidSpec("need at least one measurement".into()));
    }
    let mut rng = SeededRng::new(derive_seed(seed, STREAM_MATRIX));
    let sensors: Vec<DMatrix<f64>> = (0..m).map(|_| rng.normal_matrix(d, d)).collect();
    let mut rng = SeededRng::new(derive_seed(seed, STREAM_TARGET));
    let u_hat = rng.normal_matrix(d, r);
    let x_star = &u_hat * u_hat.transpose();
    Ok(SensingProblem::from_parts(sensors, x_star, r))
}
