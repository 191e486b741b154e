//! Seeded (1+1) evolution strategy on the determinant-one part of a group.
//!
//! Each trial draws Gaussian coefficients on a fixed Frobenius-orthonormal
//! basis of traceless directions (off-diagonal units, then normalized
//! diagonal differences; for pairs the left basis precedes the right one),
//! normalizes the direction to unit length, and proposes `exp(sigma M)`
//! composed on the left of the current best element. Improvements double
//! `sigma` up to the radius; failures shrink it by `2^{-1/4}`. Finite sets
//! are enumerated instead.

use nalgebra::DMatrix;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, traceless_basis};
use crate::orbit::{orbit_norm, whiten_by_weights, GroupElement, GroupModelSpec};
use crate::sampling::{stream, Normals};

/// Generator stream reserved for searches.
const SEARCH_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub trials: usize,
    /// Largest step length in the tangent space.
    pub radius: f64,
    pub seed: u64,
}

impl SearchConfig {
    pub fn new(trials: usize, radius: f64, seed: u64) -> Result<Self> {
        let cfg = Self { trials, radius, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Domain("search needs at least one trial".into()));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::Domain(format!("search radius must be positive, got {}", self.radius)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_value: f64,
    pub element: GroupElement,
    pub start_value: f64,
    /// Number of accepted proposals.
    pub accepted: usize,
}

pub fn random_orbit_search(data: &Dataset, model: &GroupModelSpec, cfg: &SearchConfig) -> Result<SearchResult> {
    random_orbit_search_from(data, model, &GroupElement::identity_for(model), cfg)
}

/// Squared orbit norm specialised for repeated evaluation.
enum Objective {
    Scatter(DMatrix<f64>),
    Pairs(Vec<DMatrix<f64>>),
}

impl Objective {
    fn eval(&self, element: &GroupElement) -> f64 {
        match (self, element) {
            (Objective::Scatter(s), GroupElement::Linear(a)) => (a * s * a.transpose()).trace(),
            (Objective::Pairs(xs), GroupElement::LeftRight(a1, a2)) => {
                let a2t = a2.transpose();
                xs.iter().map(|x| frobenius_sq(&(a1 * x * &a2t))).sum()
            }
            _ => unreachable!("element kind fixed by the model"),
        }
    }
}

pub fn random_orbit_search_from(
    data: &Dataset,
    model: &GroupModelSpec,
    start: &GroupElement,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    cfg.validate()?;
    model.check_compatible(data)?;
    if let GroupModelSpec::FiniteSet { elements } = model {
        let mut best: Option<(f64, GroupElement)> = None;
        for (index, a) in elements.iter().enumerate() {
            let element = GroupElement::Finite { index, matrix: a.clone() };
            let v = orbit_norm(&element, data)?;
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, element));
            }
        }
        let (best_value, element) = best.expect("finite sets are non-empty");
        let start_value = orbit_norm(start, data)?;
        return Ok(SearchResult { best_value, element, start_value, accepted: 0 });
    }

    let (objective, left, right) = match (model, data) {
        (GroupModelSpec::FullGL { p }, Dataset::Vector(d)) => {
            (Objective::Scatter(d.scatter()), traceless_basis(*p), Vec::new())
        }
        (GroupModelSpec::LeftRightGL { p, q }, Dataset::Matrix(d)) => {
            (Objective::Pairs(whiten_by_weights(d)), traceless_basis(*p), traceless_basis(*q))
        }
        _ => unreachable!("compatibility checked above"),
    };
    let start_value = orbit_norm(start, data)?;
    let mut best = start.clone();
    let mut best_value = objective.eval(&best);
    let dims = left.len() + right.len();
    if dims == 0 {
        return Ok(SearchResult { best_value, element: best, start_value, accepted: 0 });
    }

    let mut normals = Normals::new(stream(cfg.seed, SEARCH_STREAM));
    let mut sigma = cfg.radius;
    let mut accepted = 0;
    let combine = |basis: &[DMatrix<f64>], coeffs: &[f64], n: usize| {
        basis.iter().zip(coeffs).fold(DMatrix::zeros(n, n), |acc, (e, c)| acc + e * *c)
    };
    for _ in 0..cfg.trials {
        let coeffs: Vec<f64> = (0..dims).map(|_| normals.next()).collect();
        let scale = sigma / coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        let candidate = match &best {
            GroupElement::Linear(a) => {
                let m = combine(&left, &coeffs, a.nrows()) * scale;
                GroupElement::Linear(m.exp() * a)
            }
            GroupElement::LeftRight(a1, a2) => {
                let (c1, c2) = coeffs.split_at(left.len());
                let m1 = combine(&left, c1, a1.nrows()) * scale;
                let m2 = combine(&right, c2, a2.nrows()) * scale;
                GroupElement::LeftRight(m1.exp() * a1, m2.exp() * a2)
            }
            GroupElement::Finite { .. } => unreachable!("finite sets are enumerated"),
        };
        let value = objective.eval(&candidate);
        if value < best_value {
            best = candidate;
            best_value = value;
            accepted += 1;
            sigma = (2.0 * sigma).min(cfg.radius);
        } else {
            sigma *= 0.840_896_415_253_714_5; // 2^{-1/4}
        }
    }
    Ok(SearchResult { best_value, element: best, start_value, accepted })
}
