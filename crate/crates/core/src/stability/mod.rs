//! Stability of the whitened data under the group action, and the shape of
//! the resulting MLE set.
//!
//! Data are unstable when zero lies in the closure of their orbit, semistable
//! otherwise, polystable when the orbit is also closed, and stable when in
//! addition the stabilizer is finite. Unstable data have an unbounded
//! likelihood; polystable data have an MLE; semistable data that are not
//! polystable have a bounded likelihood whose supremum is not attained.
//!
//! Only the identity component of the stabilizer is computed: its Lie algebra
//! is the nullspace of the linearized action restricted to traceless
//! directions, so `lie_dim = 0` certifies a finite stabilizer.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, nullspace};
use crate::orbit::{whiten_by_weights, FlipFlopOptions, GroupElement, GroupModelSpec, OptimizerReport, Termination};

/// Numerical thresholds behind every stability verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    /// Smallest/largest eigenvalue ratio at which a scatter counts as singular.
    pub rank_tol: f64,
    /// Unstable when the value falls below this fraction of the initial value...
    pub unstable_value_ratio: f64,
    /// ...while the iterate condition number exceeds this.
    pub unstable_condition: f64,
    /// Iterations over which a plateau is measured.
    pub plateau_window: usize,
    /// Relative value decrease over the window below which the value has stalled.
    pub plateau_rel_change: f64,
    /// A stalled run is not converging while the residual exceeds this fraction of the value.
    pub plateau_residual_ratio: f64,
    /// Iterate condition number above which a stalled run is degenerating.
    pub plateau_condition: f64,
    /// Relative singular-value cutoff of the stabilizer nullspace.
    pub stabilizer_tol: f64,
    /// Relative first-order change of the concentration below which a
    /// stabilizer direction fixes it.
    pub conjugation_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            rank_tol: 1e-12,
            unstable_value_ratio: 1e-10,
            unstable_condition: 1e8,
            plateau_window: 100,
            plateau_rel_change: 1e-3,
            plateau_residual_ratio: 1e-6,
            plateau_condition: 1e6,
            stabilizer_tol: 1e-10,
            conjugation_tol: 1e-8,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rank_tol", self.rank_tol),
            ("unstable_value_ratio", self.unstable_value_ratio),
            ("unstable_condition", self.unstable_condition),
            ("plateau_rel_change", self.plateau_rel_change),
            ("plateau_residual_ratio", self.plateau_residual_ratio),
            ("plateau_condition", self.plateau_condition),
            ("stabilizer_tol", self.stabilizer_tol),
            ("conjugation_tol", self.conjugation_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("threshold {name} must be positive, got {v}")));
            }
        }
        if self.plateau_window == 0 {
            return Err(Error::Domain("plateau_window must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StabilityKind {
    Unstable,
    SemistableNotPolystable,
    Polystable,
    Stable,
}

impl StabilityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityKind::Unstable => "unstable",
            StabilityKind::SemistableNotPolystable => "semistable_not_polystable",
            StabilityKind::Polystable => "polystable",
            StabilityKind::Stable => "stable",
        }
    }

    /// Whether an MLE exists for data of this class.
    pub fn has_mle(self) -> bool {
        matches!(self, StabilityKind::Polystable | StabilityKind::Stable)
    }
}

impl std::fmt::Display for StabilityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Evidence behind a verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub inner_value: f64,
    pub initial_value: f64,
    pub residual: f64,
    pub max_condition: f64,
    pub iterations: usize,
    pub lie_dim: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StabilityClass {
    Unstable(Diagnostics),
    SemistableNotPolystable(Diagnostics),
    Polystable(Diagnostics),
    Stable(Diagnostics),
}

impl StabilityClass {
    pub fn kind(&self) -> StabilityKind {
        match self {
            StabilityClass::Unstable(_) => StabilityKind::Unstable,
            StabilityClass::SemistableNotPolystable(_) => StabilityKind::SemistableNotPolystable,
            StabilityClass::Polystable(_) => StabilityKind::Polystable,
            StabilityClass::Stable(_) => StabilityKind::Stable,
        }
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        match self {
            StabilityClass::Unstable(d)
            | StabilityClass::SemistableNotPolystable(d)
            | StabilityClass::Polystable(d)
            | StabilityClass::Stable(d) => d,
        }
    }
}

/// A tangent direction at the identity of the group.
#[derive(Debug, Clone, PartialEq)]
pub enum TangentDirection {
    Linear(DMatrix<f64>),
    LeftRight(DMatrix<f64>, DMatrix<f64>),
}

impl TangentDirection {
    pub fn norm(&self) -> f64 {
        match self {
            TangentDirection::Linear(m) => m.norm(),
            TangentDirection::LeftRight(a, b) => (frobenius_sq(a) + frobenius_sq(b)).sqrt(),
        }
    }
}

/// Lie algebra of the identity component of the stabilizer.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerInfo {
    pub lie_dim: usize,
    /// Frobenius-orthonormal basis.
    pub basis: Vec<TangentDirection>,
}

/// How many MLEs the data admit.
#[derive(Debug, Clone, PartialEq)]
pub enum MleMultiplicity {
    Unique,
    FiniteFamily {
        count: usize,
    },
    /// Conjugation along `directions` moves the MLE.
    InfiniteFamily {
        directions: Vec<TangentDirection>,
    },
    NoMle,
}

impl MleMultiplicity {
    pub fn as_str(&self) -> &'static str {
        match self {
            MleMultiplicity::Unique => "unique",
            MleMultiplicity::FiniteFamily { .. } => "finite_family",
            MleMultiplicity::InfiniteFamily { .. } => "infinite_family",
            MleMultiplicity::NoMle => "none",
        }
    }
}

pub fn stabilizer_lie_dim(data: &Dataset, model: &GroupModelSpec) -> Result<StabilizerInfo> {
    stabilizer_lie_dim_with(data, model, Thresholds::default().stabilizer_tol)
}

/// Nullspace of `{M y_i = 0, tr M = 0}` (vector models) or
/// `{M1 X_i + X_i M2^T = 0, tr M1 = tr M2 = 0}` (left-right), on the
/// whitened data normalized to unit total norm.
pub fn stabilizer_lie_dim_with(data: &Dataset, model: &GroupModelSpec, tol: f64) -> Result<StabilizerInfo> {
    model.check_compatible(data)?;
    let basis = match (model, data) {
        (GroupModelSpec::FiniteSet { .. }, _) => Vec::new(),
        (_, Dataset::Vector(d)) => {
            let ys = normalized(whiten_by_weights(d));
            let p = d.dim();
            let unknowns = p * p;
            let mut system = DMatrix::zeros(ys.len() * p + 1, unknowns);
            for k in 0..unknowns {
                let m = unit(p, k);
                for (i, y) in ys.iter().enumerate() {
                    system.view_mut((i * p, k), (p, 1)).copy_from(&(&m * y));
                }
                system[(ys.len() * p, k)] = m.trace();
            }
            nullspace(&system, tol)
                .into_iter()
                .map(|v| TangentDirection::Linear(DMatrix::from_column_slice(p, p, v.as_slice())))
                .collect()
        }
        (_, Dataset::Matrix(d)) => {
            let xs = normalized(whiten_by_weights(d));
            let (p, q) = (d.rows(), d.cols());
            let unknowns = p * p + q * q;
            let block = p * q;
            let mut system = DMatrix::zeros(xs.len() * block + 2, unknowns);
            for k in 0..unknowns {
                let (m1, m2) = if k < p * p {
                    (unit(p, k), DMatrix::zeros(q, q))
                } else {
                    (DMatrix::zeros(p, p), unit(q, k - p * p))
                };
                for (i, x) in xs.iter().enumerate() {
                    let image = &m1 * x + x * m2.transpose();
                    system.view_mut((i * block, k), (block, 1)).copy_from_slice(image.as_slice());
                }
                system[(xs.len() * block, k)] = m1.trace();
                system[(xs.len() * block + 1, k)] = m2.trace();
            }
            nullspace(&system, tol)
                .into_iter()
                .map(|v| {
                    let m1 = DMatrix::from_column_slice(p, p, &v.as_slice()[..p * p]);
                    let m2 = DMatrix::from_column_slice(q, q, &v.as_slice()[p * p..]);
                    TangentDirection::LeftRight(m1, m2)
                })
                .collect()
        }
    };
    Ok(StabilizerInfo { lie_dim: basis.len(), basis })
}

/// Column-major unit matrix `E_k` of size `n x n`.
fn unit(n: usize, k: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m.as_mut_slice()[k] = 1.0;
    m
}

fn normalized<T>(samples: Vec<T>) -> Vec<T>
where
    T: std::ops::Mul<f64, Output = T> + Clone + SquaredNorm,
{
    let total: f64 = samples.iter().map(SquaredNorm::squared_norm).sum();
    if total > 0.0 {
        let s = 1.0 / total.sqrt();
        samples.into_iter().map(|x| x * s).collect()
    } else {
        samples
    }
}

trait SquaredNorm {
    fn squared_norm(&self) -> f64;
}

impl SquaredNorm for DVector<f64> {
    fn squared_norm(&self) -> f64 {
        self.norm_squared()
    }
}

impl SquaredNorm for DMatrix<f64> {
    fn squared_norm(&self) -> f64 {
        frobenius_sq(self)
    }
}

/// Verdict from a finished inner minimization.
pub fn classify_report(
    report: &OptimizerReport,
    stabilizer: &StabilizerInfo,
    model: &GroupModelSpec,
) -> Result<StabilityClass> {
    let diag = |reason: &str| Diagnostics {
        inner_value: report.inner_value,
        initial_value: report.initial_value,
        residual: report.residual,
        max_condition: report.max_condition,
        iterations: report.iterations,
        lie_dim: stabilizer.lie_dim,
        reason: reason.to_string(),
    };
    let closed = |reason: &str| {
        if stabilizer.lie_dim == 0 {
            StabilityClass::Stable(diag(reason))
        } else {
            StabilityClass::Polystable(diag(reason))
        }
    };
    Ok(match model {
        GroupModelSpec::FiniteSet { .. } => {
            if report.initial_value > 0.0 {
                StabilityClass::Stable(diag("finite orbit of nonzero data"))
            } else {
                StabilityClass::Unstable(diag("zero data"))
            }
        }
        GroupModelSpec::FullGL { .. } => match report.termination {
            Termination::SingularScatter | Termination::Vanishing => {
                StabilityClass::Unstable(diag("weighted scatter is singular"))
            }
            _ => closed("weighted scatter is nonsingular"),
        },
        GroupModelSpec::LeftRightGL { .. } => match report.termination {
            Termination::SingularScatter => StabilityClass::Unstable(diag("a half-step scatter is singular")),
            Termination::Vanishing => StabilityClass::Unstable(diag("orbit norm vanishes along the iterates")),
            Termination::Converged | Termination::Enumerated => closed("moment map vanishes at the minimizer"),
            Termination::Plateau => StabilityClass::SemistableNotPolystable(diag(
                "value stalled away from zero with a large residual and diverging iterates",
            )),
            Termination::MaxIter => {
                return Err(Error::Inconclusive {
                    iterations: report.iterations,
                    value: report.inner_value,
                    residual: report.residual,
                    condition: report.max_condition,
                })
            }
        },
    })
}

/// Stability class of the whitened data, using the default optimizer settings.
pub fn classify(data: &Dataset, model: &GroupModelSpec, thresholds: &Thresholds) -> Result<StabilityClass> {
    let opts = FlipFlopOptions { thresholds: thresholds.clone(), ..Default::default() };
    classify_with(data, model, &opts)
}

pub fn classify_with(data: &Dataset, model: &GroupModelSpec, opts: &FlipFlopOptions) -> Result<StabilityClass> {
    opts.thresholds.validate()?;
    let report = crate::orbit::inner_minimize(data, model, opts)?;
    let stabilizer = stabilizer_lie_dim_with(data, model, opts.thresholds.stabilizer_tol)?;
    classify_report(&report, &stabilizer, model)
}

fn gram(a: &DMatrix<f64>) -> DMatrix<f64> {
    crate::linalg::symmetrize(&(a.transpose() * a))
}

/// Relative first-order change `|M^T Q + Q M| / |Q|` of the minimizer's
/// concentration `Q` along a stabilizer direction (Kronecker form for pairs).
pub fn first_order_drift(direction: &TangentDirection, minimizer: &GroupElement) -> Result<f64> {
    match (direction, minimizer) {
        (TangentDirection::Linear(m), element) if element.linear().is_some() => {
            let q = gram(element.linear().expect("checked"));
            Ok((m.transpose() * &q + &q * m).norm() / q.norm())
        }
        (TangentDirection::LeftRight(m1, m2), GroupElement::LeftRight(b1, b2)) => {
            let (q1, q2) = (gram(b1), gram(b2));
            let d1 = m1.transpose() * &q1 + &q1 * m1;
            let d2 = m2.transpose() * &q2 + &q2 * m2;
            let change = d2.kronecker(&q1) + q2.kronecker(&d1);
            Ok(change.norm() / q2.kronecker(&q1).norm())
        }
        _ => Err(Error::ModelMismatch("direction and minimizer belong to different groups".into())),
    }
}

/// Relative change of the concentration `Q` under conjugation by
/// `exp(step * M)`: `|S^T Q S - Q| / |Q|`.
pub fn conjugation_drift(direction: &TangentDirection, minimizer: &GroupElement, step: f64) -> Result<f64> {
    match (direction, minimizer) {
        (TangentDirection::Linear(m), element) if element.linear().is_some() => {
            let q = gram(element.linear().expect("checked"));
            let s = (m * step).exp();
            Ok((s.transpose() * &q * &s - &q).norm() / q.norm())
        }
        (TangentDirection::LeftRight(m1, m2), GroupElement::LeftRight(b1, b2)) => {
            let (q1, q2) = (gram(b1), gram(b2));
            let (s1, s2) = ((m1 * step).exp(), (m2 * step).exp());
            let before = q2.kronecker(&q1);
            let after = (s2.transpose() * &q2 * &s2).kronecker(&(s1.transpose() * &q1 * &s1));
            Ok((after - &before).norm() / before.norm())
        }
        _ => Err(Error::ModelMismatch("direction and minimizer belong to different groups".into())),
    }
}

/// Uniqueness of the MLE from a converged inner minimization.
pub fn mle_family(
    report: &OptimizerReport,
    stabilizer: &StabilizerInfo,
    model: &GroupModelSpec,
) -> Result<MleMultiplicity> {
    mle_family_with(report, stabilizer, model, Thresholds::default().conjugation_tol)
}

pub fn mle_family_with(
    report: &OptimizerReport,
    stabilizer: &StabilizerInfo,
    model: &GroupModelSpec,
    conjugation_tol: f64,
) -> Result<MleMultiplicity> {
    if !report.converged {
        return Err(Error::NotConverged(format!("inner minimization stopped with {:?}", report.termination)));
    }
    if let GroupModelSpec::FiniteSet { .. } = model {
        let mut distinct: Vec<DMatrix<f64>> = Vec::new();
        for element in std::iter::once(&report.minimizer).chain(&report.ties) {
            let g = gram(
                element
                    .linear()
                    .ok_or_else(|| Error::ModelMismatch("finite-set report holds a left-right element".into()))?,
            );
            let scale = g.amax();
            if !distinct.iter().any(|d| (d - &g).amax() <= 1e-10 * scale) {
                distinct.push(g);
            }
        }
        return Ok(match distinct.len() {
            1 => MleMultiplicity::Unique,
            count => MleMultiplicity::FiniteFamily { count },
        });
    }
    let mut moving = Vec::new();
    for direction in &stabilizer.basis {
        if first_order_drift(direction, &report.minimizer)? > conjugation_tol {
            moving.push(direction.clone());
        }
    }
    Ok(if moving.is_empty() {
        MleMultiplicity::Unique
    } else {
        MleMultiplicity::InfiniteFamily { directions: stabilizer.basis.clone() }
    })
}

#[cfg(test)]
mod tests;
