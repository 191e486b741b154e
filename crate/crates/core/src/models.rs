//! Symmetric Laplace densities and likelihoods.
//!
//! A `p`-dimensional symmetric Laplace vector with scale `Sigma` has density
//!
//! ```text
//! f(y) = 2 (2 pi)^{-p/2} |Sigma|^{-1/2} (q / 2)^{nu/2} K_nu(sqrt(2 q)),
//! q = y^T Sigma^{-1} y,  nu = (2 - p) / 2,
//! ```
//!
//! and arises as `sqrt(W) Z` with `W ~ Exp(1)` and `Z ~ N(0, Sigma)`. The
//! matrix variate law is the vector law of `vec(X)` with scale
//! `Sigma2 (x) Sigma1`. Everything here is computed in the log domain.
//!
//! Complete-data log-likelihoods use the unhalved normalization
//! `N ln|Psi| - sum_i y_i^T Psi y_i / w_i`. This is twice the halved form
//! `(N/2) ln|Psi| - (1/2) sum_i ...`, so both have the same maximizers.

use std::f64::consts::{LN_2, PI};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::data::{WeightedMatrixData, WeightedSample, WeightedVectorData};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_spd, log_det_cholesky};
use crate::special::{log_bessel_k, BesselPoint};

/// Bessel order `(2 - d) / 2` of a `d`-dimensional symmetric Laplace density.
pub fn bessel_order(dim: usize) -> f64 {
    (2.0 - dim as f64) / 2.0
}

#[derive(Debug, Clone)]
pub struct MultivariateLaplaceParams {
    sigma: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl PartialEq for MultivariateLaplaceParams {
    fn eq(&self, other: &Self) -> bool {
        self.sigma == other.sigma
    }
}

impl MultivariateLaplaceParams {
    pub fn new(sigma: DMatrix<f64>) -> Result<Self> {
        let chol = cholesky_spd(&sigma, "Sigma")?;
        let log_det = log_det_cholesky(&chol);
        Ok(Self { sigma, chol, log_det })
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Lower Cholesky factor `L` with `Sigma = L L^T`.
    pub fn lower_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// `y^T Sigma^{-1} y`.
    pub fn quad_form(&self, y: &DVector<f64>) -> Result<f64> {
        check_len(y.len(), self.dim())?;
        let z = self.chol.l_dirty().solve_lower_triangular(y).expect("Cholesky factor has a positive diagonal");
        Ok(z.norm_squared())
    }
}

#[derive(Debug, Clone)]
pub struct MatrixLaplaceParams {
    row: MultivariateLaplaceParams,
    col: MultivariateLaplaceParams,
}

impl PartialEq for MatrixLaplaceParams {
    fn eq(&self, other: &Self) -> bool {
        self.row == other.row && self.col == other.col
    }
}

impl MatrixLaplaceParams {
    pub fn new(sigma1: DMatrix<f64>, sigma2: DMatrix<f64>) -> Result<Self> {
        Ok(Self {
            row: MultivariateLaplaceParams::new(sigma1).map_err(|e| relabel(e, "Sigma1"))?,
            col: MultivariateLaplaceParams::new(sigma2).map_err(|e| relabel(e, "Sigma2"))?,
        })
    }

    pub fn sigma1(&self) -> &DMatrix<f64> {
        self.row.sigma()
    }

    pub fn sigma2(&self) -> &DMatrix<f64> {
        self.col.sigma()
    }

    /// `(p, q)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.row.dim(), self.col.dim())
    }

    pub fn lower_factors(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.row.lower_factor(), self.col.lower_factor())
    }

    /// `ln|Sigma2 (x) Sigma1| = p ln|Sigma2| + q ln|Sigma1|`.
    pub fn log_det(&self) -> f64 {
        let (p, q) = self.shape();
        q as f64 * self.row.log_det + p as f64 * self.col.log_det
    }

    /// `tr(Sigma2^{-1} x^T Sigma1^{-1} x)`, evaluated as `|L1^{-1} x L2^{-T}|_F^2`.
    pub fn quad_form(&self, x: &DMatrix<f64>) -> Result<f64> {
        let (p, q) = self.shape();
        if x.shape() != (p, q) {
            return Err(Error::DimensionMismatch(format!(
                "expected a {p}x{q} matrix, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        let u = self.row.chol.l_dirty().solve_lower_triangular(x).expect("Cholesky factor has a positive diagonal");
        let v = self
            .col
            .chol
            .l_dirty()
            .solve_lower_triangular(&u.transpose())
            .expect("Cholesky factor has a positive diagonal");
        Ok(v.norm_squared())
    }

    /// The equivalent vector law of `vec(X)`, with scale `Sigma2 (x) Sigma1`.
    pub fn vectorized(&self) -> Result<MultivariateLaplaceParams> {
        MultivariateLaplaceParams::new(self.sigma2().kronecker(self.sigma1()))
    }
}

fn relabel(e: Error, what: &str) -> Error {
    match e {
        Error::NotPositiveDefinite(msg) => Error::NotPositiveDefinite(msg.replacen("Sigma", what, 1)),
        other => other,
    }
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!("expected a vector of length {want}, got {got}")));
    }
    Ok(())
}

/// Log density from the dimension, `ln|Sigma|` and the quadratic form.
fn log_density(dim: usize, log_det: f64, q: f64, index: usize) -> Result<f64> {
    let d = dim as f64;
    if q == 0.0 {
        // Only the univariate density is finite at the origin: 1 / sqrt(2 sigma).
        return if dim == 1 { Ok(-0.5 * LN_2 - 0.5 * log_det) } else { Err(Error::Pole { index, dim }) };
    }
    let nu = bessel_order(dim);
    let lk = log_bessel_k(BesselPoint::new(nu, (2.0 * q).sqrt())?)?;
    Ok(LN_2 - 0.5 * d * (2.0 * PI).ln() - 0.5 * log_det + 0.5 * nu * (0.5 * q).ln() + lk)
}

pub fn log_pdf_mvsl(y: &DVector<f64>, params: &MultivariateLaplaceParams) -> Result<f64> {
    let q = params.quad_form(y)?;
    log_density(params.dim(), params.log_det, q, 0)
}

pub fn log_pdf_matsl(x: &DMatrix<f64>, params: &MatrixLaplaceParams) -> Result<f64> {
    let q = params.quad_form(x)?;
    let (p, c) = params.shape();
    log_density(p * c, params.log_det(), q, 0)
}

fn log_joint(dim: usize, log_det: f64, q: f64, w: f64) -> Result<f64> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::Domain(format!("mixing weight must be positive, got {w}")));
    }
    let d = dim as f64;
    Ok(-0.5 * d * (2.0 * PI).ln() - 0.5 * log_det - 0.5 * d * w.ln() - w - q / (2.0 * w))
}

/// `ln f(y, w) = -(p/2) ln 2pi - (1/2) ln|Sigma| - (p/2) ln w - w - y^T Sigma^{-1} y / (2w)`.
pub fn log_joint_pdf(y: &DVector<f64>, w: f64, params: &MultivariateLaplaceParams) -> Result<f64> {
    let q = params.quad_form(y)?;
    log_joint(params.dim(), params.log_det, q, w)
}

pub fn log_joint_pdf_matrix(x: &DMatrix<f64>, w: f64, params: &MatrixLaplaceParams) -> Result<f64> {
    let q = params.quad_form(x)?;
    let (p, c) = params.shape();
    log_joint(p * c, params.log_det(), q, w)
}

/// Observed-data log-likelihood in its constant-free form
///
/// ```text
/// -(N/2) ln|Sigma| + (nu/2) sum_i ln q_i + sum_i ln K_nu(sqrt(2 q_i)).
/// ```
///
/// Adding [`observed_loglik_offset`] gives `sum_i ln f(y_i)` exactly.
pub fn observed_loglik(data: &[DVector<f64>], params: &MultivariateLaplaceParams) -> Result<f64> {
    let p = params.dim();
    let nu = bessel_order(p);
    let mut total = -0.5 * data.len() as f64 * params.log_det;
    for (index, y) in data.iter().enumerate() {
        let q = params.quad_form(y)?;
        if q == 0.0 {
            return Err(Error::Pole { index, dim: p });
        }
        total += 0.5 * nu * q.ln() + log_bessel_k(BesselPoint::new(nu, (2.0 * q).sqrt())?)?;
    }
    Ok(total)
}

/// `N (ln 2 - (p/2) ln 2pi - (nu/2) ln 2)`, the constant dropped by [`observed_loglik`].
pub fn observed_loglik_offset(n: usize, dim: usize) -> f64 {
    let nu = bessel_order(dim);
    n as f64 * (LN_2 - 0.5 * dim as f64 * (2.0 * PI).ln() - 0.5 * nu * LN_2)
}

/// `N ln|Psi| - sum_i y_i^T Psi y_i / w_i`.
pub fn complete_loglik(data: &WeightedVectorData, psi: &DMatrix<f64>) -> Result<f64> {
    let chol = cholesky_spd(psi, "Psi")?;
    if psi.nrows() != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Psi is {0}x{0} but samples have length {1}",
            psi.nrows(),
            data.dim()
        )));
    }
    let trace: f64 = data.samples().iter().zip(data.weights()).map(|(y, w)| y.dot(&(psi * y)) / w).sum();
    Ok(data.len() as f64 * log_det_cholesky(&chol) - trace)
}

/// `qN ln|Psi1| + pN ln|Psi2| - sum_i tr(Psi2 X_i^T Psi1 X_i) / w_i`.
pub fn complete_loglik_matrix(data: &WeightedMatrixData, psi1: &DMatrix<f64>, psi2: &DMatrix<f64>) -> Result<f64> {
    let c1 = cholesky_spd(psi1, "Psi1")?;
    let c2 = cholesky_spd(psi2, "Psi2")?;
    let (p, q) = (data.rows(), data.cols());
    if psi1.nrows() != p || psi2.nrows() != q {
        return Err(Error::DimensionMismatch(format!("Psi1 and Psi2 must be {p}x{p} and {q}x{q} for {p}x{q} samples")));
    }
    let trace: f64 =
        data.samples().iter().zip(data.weights()).map(|(x, w)| (psi2 * x.transpose() * psi1 * x).trace() / w).sum();
    let n = data.len() as f64;
    Ok(q as f64 * n * log_det_cholesky(&c1) + p as f64 * n * log_det_cholesky(&c2) - trace)
}
