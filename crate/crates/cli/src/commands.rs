use std::path::Path;

use log::info;
use nalgebra::DMatrix;
use orbitlap::models::bessel_order;
use orbitlap::stability::classify_with;
use orbitlap::{
    complete_loglik, complete_loglik_matrix, estimate_with, observed_loglik, observed_loglik_offset, sample_matsl,
    sample_mvsl, Dataset, Error, SampleRequest, WeightedSample,
};

use crate::config::{read_params, Params, RunConfig};
use crate::dataset::read_dataset;
use crate::error::{CliError, CliResult};
use crate::report::{to_json, ClassifyJson, EstimateJson, InconclusiveJson, LoglikJson};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const ERROR: u8 = 1;
    /// The data admit no MLE.
    pub const NO_MLE: u8 = 2;
    pub const INCONCLUSIVE: u8 = 3;
    pub const SELFTEST_FAILED: u8 = 4;
}

/// Text for standard output (or `--output`) and the exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub text: String,
    pub code: u8,
}

fn inconclusive(model: &'static str, e: &Error) -> Option<CommandOutput> {
    let Error::Inconclusive { iterations, value, residual, condition } = *e else {
        return None;
    };
    let json = InconclusiveJson { model, stability: "inconclusive", iterations, value, residual, condition };
    Some(CommandOutput { text: to_json(&json), code: exit::INCONCLUSIVE })
}

pub fn estimate(dataset: &Path, config: &RunConfig) -> CliResult<CommandOutput> {
    let data = read_dataset(dataset)?;
    let model = config.model_for(&data)?;
    info!("estimating {} model on {} samples", model.name(), data.len());
    match estimate_with(&data, &model, &config.options()) {
        Ok(report) => {
            let json = EstimateJson::new(&report, model.name(), data.len(), data.shape());
            let code = if report.stability.kind().has_mle() { exit::OK } else { exit::NO_MLE };
            Ok(CommandOutput { text: to_json(&json), code })
        }
        Err(e) => inconclusive(model.name(), &e).ok_or(CliError::Core(e)),
    }
}

pub fn classify(dataset: &Path, config: &RunConfig) -> CliResult<CommandOutput> {
    let data = read_dataset(dataset)?;
    let model = config.model_for(&data)?;
    match classify_with(&data, &model, &config.options()) {
        Ok(class) => Ok(CommandOutput { text: to_json(&ClassifyJson::new(&class, model.name())), code: exit::OK }),
        Err(e) => inconclusive(model.name(), &e).ok_or(CliError::Core(e)),
    }
}

pub fn sample(params: &Path, count: usize, seed: u64) -> CliResult<Dataset> {
    Ok(match read_params(params)? {
        Params::Vector(p) => Dataset::Vector(sample_mvsl(&SampleRequest::vector(count, seed, p))?),
        Params::Matrix(p) => Dataset::Matrix(sample_matsl(&SampleRequest::matrix(count, seed, p))?),
    })
}

fn inverse(sigma: &DMatrix<f64>) -> CliResult<DMatrix<f64>> {
    let inv = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("Sigma is not positive definite".into()))?
        .inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

pub fn loglik(dataset: &Path, params: &Path) -> CliResult<CommandOutput> {
    let data = read_dataset(dataset)?;
    let params = read_params(params)?;
    let n = data.len();
    let json = match (&data, &params) {
        (Dataset::Vector(d), Params::Vector(p)) => LoglikJson {
            n,
            nu: bessel_order(p.dim()),
            observed: observed_loglik(d.samples(), p)?,
            observed_constant: observed_loglik_offset(n, p.dim()),
            complete: complete_loglik(d, &inverse(p.sigma())?)?,
        },
        (Dataset::Matrix(d), Params::Matrix(p)) => {
            let flat = p.vectorized()?;
            LoglikJson {
                n,
                nu: bessel_order(flat.dim()),
                observed: observed_loglik(d.vectorized().samples(), &flat)?,
                observed_constant: observed_loglik_offset(n, flat.dim()),
                complete: complete_loglik_matrix(d, &inverse(p.sigma1())?, &inverse(p.sigma2())?)?,
            }
        }
        _ => return Err(CliError::Core(Error::ModelMismatch("parameter kind does not match the dataset kind".into()))),
    };
    Ok(CommandOutput { text: to_json(&json), code: exit::OK })
}
