//! Alternating exact minimization over `SL_p x SL_q`.
//!
//! With `B2` fixed, `tr(B1^T B1 M1)` over `SL_p` is minimized by
//! `B1^T B1 = det(M1)^{1/p} M1^{-1}` where `M1 = sum_i Xt_i Xt_i^T` and
//! `Xt_i = B1 X_i B2^T` (closed form applied to the current row scatter);
//! `B2` is updated the same way from the column scatter. The factors are
//! kept as determinant-one matrices and the transformed data are recomputed
//! from the original sample at every half-step, so no error accumulates in
//! the data.

use log::debug;
use nalgebra::DMatrix;

use crate::data::WeightedMatrixData;
use crate::error::{Error, Result};
use crate::linalg::{normalize_det, spd_condition, sym_eigen, sym_fn};
use crate::stability::Thresholds;

use super::{gram_sums, whiten_by_weights, GroupElement, OptimizerReport, Termination};

#[derive(Debug, Clone, PartialEq)]
pub struct FlipFlopOptions {
    /// Convergence when the moment residual is at most `tol * tau`.
    pub tol: f64,
    pub max_iter: usize,
    pub thresholds: Thresholds,
}

impl Default for FlipFlopOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 10_000, thresholds: Thresholds::default() }
    }
}

pub fn flip_flop_minimize(data: &WeightedMatrixData, tol: f64, max_iter: usize) -> Result<OptimizerReport> {
    flip_flop_with(data, &FlipFlopOptions { tol, max_iter, ..Default::default() })
}

fn transform(samples: &[DMatrix<f64>], b1: &DMatrix<f64>, b2: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let b2t = b2.transpose();
    samples.iter().map(|x| b1 * x * &b2t).collect()
}

/// Half-step update `T = det(M)^{1/(2n)} M^{-1/2}`, or `None` if `M` is singular.
fn balancing_factor(m: &DMatrix<f64>, rank_tol: f64) -> Option<DMatrix<f64>> {
    let (vals, _) = sym_eigen(m);
    let hi = vals[vals.len() - 1];
    if !(hi > 0.0) || vals[0] <= rank_tol * hi {
        return None;
    }
    let n = vals.len() as f64;
    let geo_mean = (vals.iter().map(|v| v.ln()).sum::<f64>() / n).exp();
    Some(sym_fn(m, |v| (geo_mean / v).sqrt()))
}

fn residual_norm(rows: &DMatrix<f64>, cols: &DMatrix<f64>, tau: f64) -> f64 {
    let r1 = rows - DMatrix::identity(rows.nrows(), rows.nrows()) * (tau / rows.nrows() as f64);
    let r2 = cols - DMatrix::identity(cols.nrows(), cols.nrows()) * (tau / cols.nrows() as f64);
    r1.norm().max(r2.norm())
}

fn iterate_condition(b1: &DMatrix<f64>, b2: &DMatrix<f64>) -> f64 {
    spd_condition(&(b1.transpose() * b1)) * spd_condition(&(b2.transpose() * b2))
}

pub fn flip_flop_with(data: &WeightedMatrixData, opts: &FlipFlopOptions) -> Result<OptimizerReport> {
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if opts.max_iter == 0 {
        return Err(Error::Domain("max_iter must be at least 1".into()));
    }
    let th = &opts.thresholds;
    let samples = whiten_by_weights(data);
    let (p, q) = (data.rows(), data.cols());
    let mut b1 = DMatrix::identity(p, p);
    let mut b2 = DMatrix::identity(q, q);

    let initial = gram_sums(&samples).0.trace();
    let mut history = vec![initial];
    let mut max_condition: f64 = 1.0;

    let finish = |b1: DMatrix<f64>,
                  b2: DMatrix<f64>,
                  value: f64,
                  residual: f64,
                  iterations: usize,
                  termination: Termination,
                  max_condition: f64,
                  history: Vec<f64>| {
        debug!(
            "flip-flop stopped: {termination:?} after {iterations} iterations, value {value:e}, residual {residual:e}"
        );
        OptimizerReport {
            minimizer: GroupElement::LeftRight(b1, b2),
            ties: Vec::new(),
            inner_value: value,
            initial_value: initial,
            residual,
            tolerance: opts.tol * value,
            iterations,
            converged: termination == Termination::Converged,
            max_condition,
            termination,
            history,
        }
    };

    if !(initial > 0.0) {
        return Ok(finish(b1, b2, 0.0, 0.0, 0, Termination::Vanishing, max_condition, history));
    }

    let mut iteration = 0;
    let mut current = samples.clone();
    loop {
        let (rows, cols) = gram_sums(&current);
        let tau = rows.trace();
        if iteration > 0 {
            history.push(tau);
        }
        let residual = residual_norm(&rows, &cols, tau);
        let condition = iterate_condition(&b1, &b2);
        max_condition = max_condition.max(condition);
        let stop = |t: Termination, b1: &DMatrix<f64>, b2: &DMatrix<f64>, value: f64, history: &[f64]| {
            finish(b1.clone(), b2.clone(), value, residual, iteration, t, max_condition, history.to_vec())
        };

        if residual <= opts.tol * tau {
            return Ok(stop(Termination::Converged, &b1, &b2, tau, &history));
        }
        if tau < th.unstable_value_ratio * initial && condition > th.unstable_condition {
            return Ok(stop(Termination::Vanishing, &b1, &b2, tau, &history));
        }
        if iteration >= th.plateau_window {
            let earlier = history[2 * (iteration - th.plateau_window)];
            let change = (earlier - tau) / tau;
            if change < th.plateau_rel_change
                && condition > th.plateau_condition
                && residual > th.plateau_residual_ratio * tau
                && tau >= th.unstable_value_ratio * initial
            {
                return Ok(stop(Termination::Plateau, &b1, &b2, tau, &history));
            }
        }
        if iteration >= opts.max_iter {
            return Ok(stop(Termination::MaxIter, &b1, &b2, tau, &history));
        }

        let Some(t1) = balancing_factor(&rows, th.rank_tol) else {
            return Ok(stop(Termination::SingularScatter, &b1, &b2, 0.0, &history));
        };
        b1 = normalize_det(&(t1 * &b1)).expect("product of invertible factors");
        current = transform(&samples, &b1, &b2);
        let (_, cols) = gram_sums(&current);
        history.push(cols.trace());
        let Some(t2) = balancing_factor(&cols, th.rank_tol) else {
            return Ok(stop(Termination::SingularScatter, &b1, &b2, 0.0, &history));
        };
        b2 = normalize_det(&(t2 * &b2)).expect("product of invertible factors");
        current = transform(&samples, &b1, &b2);
        iteration += 1;
    }
}
