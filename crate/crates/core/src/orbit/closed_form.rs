use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, symmetrize, SYMMETRY_TOL};

/// Default eigenvalue ratio below which a scatter matrix counts as singular.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Minimizer of `tr(B^T B S)` over `SL_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlMinimizer {
    /// Symmetric positive definite, `det(B) = 1`.
    pub b: DMatrix<f64>,
    /// `c = p det(S)^{1/p}`.
    pub value: f64,
}

/// Closed-form inner minimizer for the full group with the default rank
/// tolerance. `Ok(None)` means `S` is singular: the infimum is zero and not
/// attained.
pub fn closed_form_sl_minimizer(s: &DMatrix<f64>) -> Result<Option<SlMinimizer>> {
    closed_form_sl_minimizer_with(s, DEFAULT_RANK_TOL)
}

/// `B^T B = det(S)^{1/p} S^{-1}`, with `B` its symmetric square root.
pub fn closed_form_sl_minimizer_with(s: &DMatrix<f64>, rank_tol: f64) -> Result<Option<SlMinimizer>> {
    if !s.is_square() || s.nrows() == 0 {
        return Err(Error::DimensionMismatch("scatter must be a non-empty square matrix".into()));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("scatter has non-finite entries".into()));
    }
    let scale = s.amax();
    if (s - s.transpose()).amax() > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositiveDefinite("scatter is not symmetric".into()));
    }
    let (vals, vecs) = sym_eigen(s);
    let lo = vals[0];
    let hi = vals[vals.len() - 1];
    if lo < -rank_tol * hi.abs().max(f64::MIN_POSITIVE) * 1e4 {
        return Err(Error::NotPositiveDefinite(format!("scatter has a negative eigenvalue {lo:e}")));
    }
    if !(hi > 0.0) || lo <= rank_tol * hi {
        return Ok(None);
    }
    let p = vals.len() as f64;
    let geo_mean = (vals.iter().map(|v| v.ln()).sum::<f64>() / p).exp();
    let root = DMatrix::from_diagonal(&vals.map(|v| (geo_mean / v).sqrt()));
    let b = symmetrize(&(&vecs * root * vecs.transpose()));
    Ok(Some(SlMinimizer { b, value: p * geo_mean }))
}
