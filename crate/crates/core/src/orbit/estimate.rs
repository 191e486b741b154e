use log::info;
use nalgebra::DMatrix;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::spd_condition;
use crate::models::{complete_loglik, complete_loglik_matrix};
use crate::stability::{
    classify_report, mle_family_with, stabilizer_lie_dim_with, MleMultiplicity, StabilityClass, StabilityKind,
    StabilizerInfo,
};

use super::{
    assemble_mle, closed_form_sl_minimizer_with, finite_group_minimize, flip_flop_with, moment_residual, outer_alpha,
    FlipFlopOptions, GroupElement, GroupModelSpec, OptimizerReport, Termination,
};

/// Optimizer and classifier settings for [`estimate_with`].
pub type EstimateOptions = FlipFlopOptions;

/// An estimated concentration matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Concentration {
    Full(DMatrix<f64>),
    /// Row and column factors of `Psi2 (x) Psi1`.
    Kronecker {
        psi1: DMatrix<f64>,
        psi2: DMatrix<f64>,
    },
}

impl Concentration {
    /// The full concentration matrix (`Psi2 (x) Psi1` for Kronecker pairs).
    pub fn matrix(&self) -> DMatrix<f64> {
        match self {
            Concentration::Full(psi) => psi.clone(),
            Concentration::Kronecker { psi1, psi2 } => psi2.kronecker(psi1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleReport {
    pub optimizer: OptimizerReport,
    /// Outer scalar `alpha = dN / c`; absent without an MLE.
    pub alpha: Option<f64>,
    /// All distinct MLEs found (several only for finite sets).
    pub concentrations: Vec<Concentration>,
    /// Supremum of the complete-data log-likelihood, `+inf` when unbounded.
    /// With an MLE it is evaluated directly at the first concentration.
    pub objective: f64,
    /// `-dN (1 - ln(dN) + ln c)`, the closed-form supremum.
    pub objective_bound: f64,
    pub stability: StabilityClass,
    pub stabilizer: StabilizerInfo,
    pub mle_unique: MleMultiplicity,
}

impl MleReport {
    pub fn concentration(&self) -> Option<&Concentration> {
        self.concentrations.first()
    }
}

/// Inner minimization dispatched on the model.
pub(crate) fn inner_minimize(
    data: &Dataset,
    model: &GroupModelSpec,
    opts: &FlipFlopOptions,
) -> Result<OptimizerReport> {
    model.check_compatible(data)?;
    match (model, data) {
        (GroupModelSpec::FullGL { p }, Dataset::Vector(d)) => {
            let s = d.scatter();
            let initial = s.trace();
            let solution = closed_form_sl_minimizer_with(&s, opts.thresholds.rank_tol)?;
            Ok(match solution {
                Some(sol) => {
                    let transformed = &sol.b * &s * sol.b.transpose();
                    let r = &transformed - DMatrix::identity(*p, *p) * (transformed.trace() / *p as f64);
                    OptimizerReport {
                        max_condition: spd_condition(&(sol.b.transpose() * &sol.b)),
                        minimizer: GroupElement::Linear(sol.b),
                        ties: Vec::new(),
                        inner_value: sol.value,
                        initial_value: initial,
                        residual: r.norm(),
                        tolerance: opts.tol * sol.value,
                        iterations: 0,
                        converged: true,
                        termination: Termination::Converged,
                        history: vec![sol.value],
                    }
                }
                None => OptimizerReport {
                    minimizer: GroupElement::Linear(DMatrix::identity(*p, *p)),
                    ties: Vec::new(),
                    inner_value: 0.0,
                    initial_value: initial,
                    residual: moment_residual(data, model)?.norm,
                    tolerance: 0.0,
                    iterations: 0,
                    converged: false,
                    max_condition: f64::INFINITY,
                    termination: Termination::SingularScatter,
                    history: vec![0.0],
                },
            })
        }
        (GroupModelSpec::FiniteSet { elements }, Dataset::Vector(d)) => {
            let mut tied = finite_group_minimize(model, data)?.into_iter();
            let (minimizer, value) = tied.next().expect("finite sets are non-empty");
            let max_condition = elements.iter().map(|a| spd_condition(&(a.transpose() * a))).fold(1.0, f64::max);
            Ok(OptimizerReport {
                minimizer,
                ties: tied.map(|(e, _)| e).collect(),
                inner_value: value,
                initial_value: d.scatter().trace(),
                residual: 0.0,
                tolerance: 0.0,
                iterations: elements.len(),
                converged: value > 0.0,
                max_condition,
                termination: Termination::Enumerated,
                history: vec![value],
            })
        }
        (GroupModelSpec::LeftRightGL { .. }, Dataset::Matrix(d)) => flip_flop_with(d, opts),
        _ => unreachable!("compatibility checked above"),
    }
}

pub fn estimate(data: &Dataset, model: &GroupModelSpec, tol: f64, max_iter: usize) -> Result<MleReport> {
    estimate_with(data, model, &EstimateOptions { tol, max_iter, ..Default::default() })
}

/// Whiten, minimize the orbit norm, solve for `alpha`, assemble the MLE and
/// classify the data.
pub fn estimate_with(data: &Dataset, model: &GroupModelSpec, opts: &EstimateOptions) -> Result<MleReport> {
    opts.thresholds.validate()?;
    let optimizer = inner_minimize(data, model, opts)?;
    let stabilizer = stabilizer_lie_dim_with(data, model, opts.thresholds.stabilizer_tol)?;
    let stability = classify_report(&optimizer, &stabilizer, model)?;
    let d = model.outer_degree();
    let n = data.len();
    info!("{} model: inner value {:e}, class {}", model.name(), optimizer.inner_value, stability.kind());

    if !stability.kind().has_mle() {
        let (objective, objective_bound) = match stability.kind() {
            StabilityKind::Unstable => (f64::INFINITY, f64::INFINITY),
            _ => {
                let (_, min_value) = outer_alpha(optimizer.inner_value, d, n)?;
                (-min_value, -min_value)
            }
        };
        return Ok(MleReport {
            optimizer,
            alpha: None,
            concentrations: Vec::new(),
            objective,
            objective_bound,
            stability,
            stabilizer,
            mle_unique: MleMultiplicity::NoMle,
        });
    }

    let (alpha, min_value) = outer_alpha(optimizer.inner_value, d, n)?;
    let mut concentrations = vec![assemble_mle(alpha, &optimizer.minimizer, model)?];
    for tie in &optimizer.ties {
        let candidate = assemble_mle(alpha, tie, model)?;
        let m = candidate.matrix();
        let scale = m.amax();
        if !concentrations.iter().any(|c| (c.matrix() - &m).amax() <= 1e-10 * scale) {
            concentrations.push(candidate);
        }
    }
    let objective = match (&concentrations[0], data) {
        (Concentration::Full(psi), Dataset::Vector(v)) => complete_loglik(v, psi)?,
        (Concentration::Kronecker { psi1, psi2 }, Dataset::Matrix(m)) => complete_loglik_matrix(m, psi1, psi2)?,
        _ => return Err(Error::ModelMismatch("concentration does not match the data".into())),
    };
    let mle_unique = mle_family_with(&optimizer, &stabilizer, model, opts.thresholds.conjugation_tol)?;
    Ok(MleReport {
        optimizer,
        alpha: Some(alpha),
        concentrations,
        objective,
        objective_bound: -min_value,
        stability,
        stabilizer,
        mle_unique,
    })
}
