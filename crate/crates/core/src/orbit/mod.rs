//! Orbit-norm minimization.
//!
//! Maximizing the complete-data log-likelihood over a Laplace group model
//! `{alpha A^T A}` splits into an inner problem, the infimum `c` of the
//! squared orbit norm `|B . Y^W|^2` over the determinant-one part of the
//! group, and an outer scalar problem `min_alpha alpha c - dN ln alpha`.
//! This module forms the whitened statistic `Y^W`, solves the inner problem
//! for each supported group, and assembles the concentration matrices.

mod closed_form;
mod estimate;
mod finite;
mod flip_flop;

use nalgebra::DMatrix;

use crate::data::{Dataset, WeightedMatrixData, WeightedSample, WeightedVectorData};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, normalize_det};

pub use closed_form::{closed_form_sl_minimizer, closed_form_sl_minimizer_with, SlMinimizer};
pub(crate) use estimate::inner_minimize;
pub use estimate::{estimate, estimate_with, Concentration, EstimateOptions, MleReport};
pub use finite::finite_group_minimize;
pub use flip_flop::{flip_flop_minimize, flip_flop_with, FlipFlopOptions};

/// Accepted deviation of `|det A|` from one for finite-set elements.
pub const DET_TOL: f64 = 1e-10;

/// The group whose Laplace group model is fitted.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupModelSpec {
    /// `GL_p` acting on vectors.
    FullGL { p: usize },
    /// A finite set of `p x p` matrices of determinant `+-1`, stored with
    /// negative-determinant elements row-flipped into `SL_p`.
    FiniteSet { elements: Vec<DMatrix<f64>> },
    /// `GL_p x GL_q` acting on `p x q` matrices by `X -> A1 X A2^T`.
    LeftRightGL { p: usize, q: usize },
}

impl GroupModelSpec {
    pub fn full(p: usize) -> Self {
        GroupModelSpec::FullGL { p }
    }

    pub fn left_right(p: usize, q: usize) -> Self {
        GroupModelSpec::LeftRightGL { p, q }
    }

    /// Validates the elements (square, common size, `|det| = 1`, pairwise
    /// distinct) and flips the first row of those with determinant `-1`.
    pub fn finite(elements: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::Domain("a finite group model needs at least one element".into()));
        };
        let p = first.nrows();
        for (i, a) in elements.iter().enumerate() {
            if a.shape() != (p, p) {
                return Err(Error::DimensionMismatch(format!(
                    "element {i} is {}x{}, expected {p}x{p}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            let det = a.determinant();
            if !det.is_finite() || (det.abs() - 1.0).abs() > DET_TOL {
                return Err(Error::Domain(format!(
                    "element {i} has determinant {det}; supply the |det| = 1 slice of the group"
                )));
            }
        }
        for i in 0..elements.len() {
            for j in 0..i {
                let scale = elements[i].amax().max(elements[j].amax());
                if (&elements[i] - &elements[j]).amax() <= 1e-12 * scale {
                    return Err(Error::Domain(format!("elements {j} and {i} coincide")));
                }
            }
        }
        let elements = elements.iter().map(|a| normalize_det(a).expect("determinant checked above")).collect();
        Ok(GroupModelSpec::FiniteSet { elements })
    }

    /// Matrix size(s) the model acts with: `(p, 1)` for vector models.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            GroupModelSpec::FullGL { p } => (*p, 1),
            GroupModelSpec::FiniteSet { elements } => (elements[0].nrows(), 1),
            GroupModelSpec::LeftRightGL { p, q } => (*p, *q),
        }
    }

    /// Fails unless the data kind and dimensions match the model.
    pub fn check_compatible(&self, data: &Dataset) -> Result<()> {
        let ok = match (self, data) {
            (GroupModelSpec::LeftRightGL { p, q }, Dataset::Matrix(d)) => d.rows() == *p && d.cols() == *q,
            (GroupModelSpec::LeftRightGL { .. }, Dataset::Vector(_)) => false,
            (_, Dataset::Vector(d)) => d.dim() == self.shape().0,
            (_, Dataset::Matrix(_)) => false,
        };
        if ok {
            Ok(())
        } else {
            let (p, q) = data.shape();
            Err(Error::ModelMismatch(format!(
                "{} cannot act on {} data of shape {p}x{q}",
                self.name(),
                match data {
                    Dataset::Vector(_) => "vector",
                    Dataset::Matrix(_) => "matrix",
                }
            )))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GroupModelSpec::FullGL { .. } => "full",
            GroupModelSpec::FiniteSet { .. } => "finite",
            GroupModelSpec::LeftRightGL { .. } => "leftright",
        }
    }

    /// `d` in `alpha = dN / c`: `p` for vector models, `pq` for matrix models.
    pub fn outer_degree(&self) -> usize {
        let (p, q) = self.shape();
        p * q
    }
}

/// An element of the determinant-one part of a group.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    Linear(DMatrix<f64>),
    LeftRight(DMatrix<f64>, DMatrix<f64>),
    /// Element `index` of a finite-set model.
    Finite {
        index: usize,
        matrix: DMatrix<f64>,
    },
}

impl GroupElement {
    pub fn identity_for(model: &GroupModelSpec) -> Self {
        match model {
            GroupModelSpec::FullGL { p } => GroupElement::Linear(DMatrix::identity(*p, *p)),
            GroupModelSpec::FiniteSet { elements } => {
                let p = elements[0].nrows();
                GroupElement::Linear(DMatrix::identity(p, p))
            }
            GroupModelSpec::LeftRightGL { p, q } => {
                GroupElement::LeftRight(DMatrix::identity(*p, *p), DMatrix::identity(*q, *q))
            }
        }
    }

    /// The acting matrix of a vector-model element.
    pub fn linear(&self) -> Option<&DMatrix<f64>> {
        match self {
            GroupElement::Linear(a) | GroupElement::Finite { matrix: a, .. } => Some(a),
            GroupElement::LeftRight(..) => None,
        }
    }
}

/// The whitened statistic `(x_1 / sqrt(w_1), ..., x_N / sqrt(w_N))`.
pub fn whiten_by_weights<D: WeightedSample>(data: &D) -> Vec<D::Sample> {
    data.samples().iter().zip(data.weights()).map(|(x, w)| D::scale_sample(x, 1.0 / w.sqrt())).collect()
}

/// `S = sum_i y_i y_i^T / w_i`.
pub fn weighted_scatter(data: &WeightedVectorData) -> DMatrix<f64> {
    data.scatter()
}

/// `sum_i |A1 X_i A2^T|_F^2 / w_i` for a matrix sample.
fn left_right_norm(a1: &DMatrix<f64>, a2: &DMatrix<f64>, data: &WeightedMatrixData) -> f64 {
    data.samples().iter().zip(data.weights()).map(|(x, w)| frobenius_sq(&(a1 * x * a2.transpose())) / w).sum()
}

/// Squared norm `|A . Y^W|^2` of the transformed whitened data.
pub fn orbit_norm(element: &GroupElement, data: &Dataset) -> Result<f64> {
    match (element, data) {
        (GroupElement::LeftRight(a1, a2), Dataset::Matrix(d)) => {
            if a1.shape() != (d.rows(), d.rows()) || a2.shape() != (d.cols(), d.cols()) {
                return Err(Error::DimensionMismatch(format!(
                    "element acts on {}x{} matrices, data are {}x{}",
                    a1.nrows(),
                    a2.nrows(),
                    d.rows(),
                    d.cols()
                )));
            }
            Ok(left_right_norm(a1, a2, d))
        }
        (GroupElement::Linear(a) | GroupElement::Finite { matrix: a, .. }, Dataset::Vector(d)) => {
            if a.shape() != (d.dim(), d.dim()) {
                return Err(Error::DimensionMismatch(format!(
                    "element is {}x{}, samples have length {}",
                    a.nrows(),
                    a.ncols(),
                    d.dim()
                )));
            }
            Ok(d.samples().iter().zip(d.weights()).map(|(y, w)| (a * y).norm_squared() / w).sum())
        }
        _ => Err(Error::DimensionMismatch("group element and data kind do not match".into())),
    }
}

/// Moment-map residual of the whitened data at the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentResidual {
    /// `|R|_F` (vector models) or `max(|R1|_F, |R2|_F)` (left-right).
    pub norm: f64,
    /// `tau = |Y^W|^2`.
    pub tau: f64,
    /// `[R]` or `[R1, R2]`.
    pub matrices: Vec<DMatrix<f64>>,
}

fn traceless_part(m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let n = m.nrows();
    m - DMatrix::identity(n, n) * (tau / n as f64)
}

/// Row and column Gram sums `sum_i X_i X_i^T / w_i` and `sum_i X_i^T X_i / w_i`.
pub(crate) fn gram_sums(samples: &[DMatrix<f64>]) -> (DMatrix<f64>, DMatrix<f64>) {
    let (p, q) = samples[0].shape();
    let mut rows = DMatrix::zeros(p, p);
    let mut cols = DMatrix::zeros(q, q);
    for x in samples {
        rows.gemm(1.0, x, &x.transpose(), 1.0);
        cols.gemm(1.0, &x.transpose(), x, 1.0);
    }
    (rows, cols)
}

/// Distance of the identity from being a critical point of the orbit norm.
pub fn moment_residual(data: &Dataset, model: &GroupModelSpec) -> Result<MomentResidual> {
    model.check_compatible(data)?;
    Ok(match data {
        Dataset::Vector(d) => {
            let s = d.scatter();
            let tau = s.trace();
            let r = traceless_part(&s, tau);
            MomentResidual { norm: r.norm(), tau, matrices: vec![r] }
        }
        Dataset::Matrix(d) => {
            let (rows, cols) = gram_sums(&whiten_by_weights(d));
            let tau = rows.trace();
            let r1 = traceless_part(&rows, tau);
            let r2 = traceless_part(&cols, tau);
            MomentResidual { norm: r1.norm().max(r2.norm()), tau, matrices: vec![r1, r2] }
        }
    })
}

/// `(alpha, min_value)` of `min_alpha alpha c - dN ln alpha`: `alpha = dN / c`
/// and `min_value = dN (1 - ln(dN) + ln c)`.
pub fn outer_alpha(c: f64, d: usize, n: usize) -> Result<(f64, f64)> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("inner infimum {c} is not positive: the likelihood is unbounded")));
    }
    if d == 0 || n == 0 {
        return Err(Error::Domain("dimension and sample size must be positive".into()));
    }
    let dn = (d * n) as f64;
    Ok((dn / c, dn * (1.0 - dn.ln() + c.ln())))
}

/// `alpha B^T B`, or for left-right models the trace-balanced pair
/// `(sqrt(alpha) kappa B1^T B1, sqrt(alpha) B2^T B2 / kappa)` with
/// `tr(Psi1) / p = tr(Psi2) / q`.
pub fn assemble_mle(alpha: f64, minimizer: &GroupElement, model: &GroupModelSpec) -> Result<Concentration> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    let (p, q) = model.shape();
    match (model, minimizer) {
        (GroupModelSpec::LeftRightGL { .. }, GroupElement::LeftRight(b1, b2)) => {
            if b1.shape() != (p, p) || b2.shape() != (q, q) {
                return Err(Error::DimensionMismatch("minimizer does not match the model".into()));
            }
            let g1 = crate::linalg::symmetrize(&(b1.transpose() * b1));
            let g2 = crate::linalg::symmetrize(&(b2.transpose() * b2));
            let kappa = ((p as f64 * g2.trace()) / (q as f64 * g1.trace())).sqrt();
            let root = alpha.sqrt();
            Ok(Concentration::Kronecker { psi1: g1 * (root * kappa), psi2: g2 * (root / kappa) })
        }
        (GroupModelSpec::LeftRightGL { .. }, _) | (_, GroupElement::LeftRight(..)) => {
            Err(Error::ModelMismatch("left-right minimizers pair only with left-right models".into()))
        }
        (_, element) => {
            let a = element.linear().expect("vector-model element");
            if a.shape() != (p, p) {
                return Err(Error::DimensionMismatch("minimizer does not match the model".into()));
            }
            Ok(Concentration::Full(crate::linalg::symmetrize(&(a.transpose() * a)) * alpha))
        }
    }
}

/// Why an inner minimization stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Moment residual within tolerance.
    Converged,
    /// A scatter matrix became singular: the data lie in the null cone.
    SingularScatter,
    /// The value fell below the unstable threshold with diverging condition.
    Vanishing,
    /// The value stalled away from zero while the residual stayed large and
    /// the iterates degenerated.
    Plateau,
    /// Iteration budget exhausted without any of the above.
    MaxIter,
    /// All candidates of a finite set were enumerated.
    Enumerated,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::SingularScatter => "singular_scatter",
            Termination::Vanishing => "vanishing",
            Termination::Plateau => "plateau",
            Termination::MaxIter => "max_iter",
            Termination::Enumerated => "enumerated",
        }
    }
}

/// Outcome of an inner minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerReport {
    pub minimizer: GroupElement,
    /// Further minimizers tied with `minimizer` (finite sets only).
    pub ties: Vec<GroupElement>,
    /// The inner value `c` (the infimum estimate).
    pub inner_value: f64,
    /// `|Y^W|^2` at the identity.
    pub initial_value: f64,
    /// Moment-map residual at the minimizer.
    pub residual: f64,
    /// Absolute residual bound used for convergence.
    pub tolerance: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest condition number of the concentration of any iterate.
    pub max_condition: f64,
    pub termination: Termination,
    /// Objective after every half-step (iterative solvers) or the single
    /// final value otherwise.
    pub history: Vec<f64>,
}
