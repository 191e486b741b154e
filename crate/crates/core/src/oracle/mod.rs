//! Independent checks for the closed forms and iterative solvers: numerical
//! quadrature of the integral representations, and a seeded random search
//! over the group.

pub mod quadrature;
mod search;

use std::f64::consts::LN_2;

use nalgebra::DMatrix;

use crate::data::{WeightedSample, WeightedVectorData};
use crate::error::{Error, Result};
use crate::models::{complete_loglik, log_joint_pdf, MultivariateLaplaceParams};
use crate::special::BesselPoint;

pub use quadrature::Tolerance;
pub use search::{random_orbit_search, random_orbit_search_from, SearchConfig, SearchResult};

/// `ln K_nu(x)` from `K_nu(x) = (1/2) (x/2)^nu * integral t^{-nu-1} exp(-t - x^2/(4t)) dt`,
/// integrated over `u = ln t`.
pub fn quadrature_log_bessel(nu: f64, x: f64) -> Result<f64> {
    BesselPoint::new(nu, x)?;
    let c = 0.25 * x * x;
    let h = |u: f64| -nu * u - u.exp() - c * (-u).exp();
    let log_integral = quadrature::log_integral_concave(h, Tolerance { abs: 0.0, rel: 1e-12 })?;
    Ok(-LN_2 + nu * (0.5 * x).ln() + log_integral)
}

pub fn quadrature_bessel(nu: f64, x: f64) -> Result<f64> {
    let v = quadrature_log_bessel(nu, x)?.exp();
    if !v.is_finite() || v == 0.0 {
        return Err(Error::OutOfRange { nu, x });
    }
    Ok(v)
}

/// `ln of the integral of f(y, w) over w in (0, inf)`, integrated over `u = ln w`.
pub fn quadrature_log_marginalize(y: &nalgebra::DVector<f64>, params: &MultivariateLaplaceParams) -> Result<f64> {
    let q = params.quad_form(y)?;
    if q == 0.0 && params.dim() >= 2 {
        return Err(Error::Pole { index: 0, dim: params.dim() });
    }
    // The joint density is evaluated directly so the oracle shares no algebra
    // with the closed-form density.
    let h = |u: f64| log_joint_pdf(y, u.exp(), params).map(|v| v + u).unwrap_or(f64::NEG_INFINITY);
    quadrature::log_integral_concave(h, Tolerance { abs: 0.0, rel: 1e-11 })
}

pub fn quadrature_marginalize(y: &nalgebra::DVector<f64>, params: &MultivariateLaplaceParams) -> Result<f64> {
    Ok(quadrature_log_marginalize(y, params)?.exp())
}

/// Complete-data and quadrature-based observed-data log-likelihoods over a
/// candidate set of concentration matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceVerdict {
    pub complete: Vec<f64>,
    pub observed: Vec<f64>,
    pub complete_argmax: usize,
    pub observed_argmax: usize,
    /// The complete-data argmax also attains the observed-data maximum.
    pub dominant: bool,
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).expect("non-empty")
}

pub fn grid_likelihood_dominance(data: &WeightedVectorData, candidates: &[DMatrix<f64>]) -> Result<DominanceVerdict> {
    if candidates.is_empty() {
        return Err(Error::Domain("candidate list is empty".into()));
    }
    let mut complete = Vec::with_capacity(candidates.len());
    let mut observed = Vec::with_capacity(candidates.len());
    for psi in candidates {
        complete.push(complete_loglik(data, psi)?);
        let sigma =
            psi.clone().try_inverse().ok_or_else(|| Error::NotPositiveDefinite("candidate is singular".into()))?;
        let params = MultivariateLaplaceParams::new(crate::linalg::symmetrize(&sigma))?;
        let mut total = 0.0;
        for y in data.samples() {
            total += quadrature_log_marginalize(y, &params)?;
        }
        observed.push(total);
    }
    let complete_argmax = argmax(&complete);
    let observed_argmax = argmax(&observed);
    let best = observed[observed_argmax];
    let dominant = observed[complete_argmax] >= best - 1e-9 * best.abs().max(1.0);
    Ok(DominanceVerdict { complete, observed, complete_argmax, observed_argmax, dominant })
}

#[cfg(test)]
mod tests;
