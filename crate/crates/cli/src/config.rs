//! Run configuration: JSON config files merged with command-line flags.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use orbitlap::stability::Thresholds;
use orbitlap::{Dataset, EstimateOptions, GroupModelSpec, MatrixLaplaceParams, MultivariateLaplaceParams};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// `full`, `leftright` or `finite:<file>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelChoice {
    Full,
    LeftRight,
    Finite(PathBuf),
}

impl FromStr for ModelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(ModelChoice::Full),
            "leftright" => Ok(ModelChoice::LeftRight),
            _ => match s.strip_prefix("finite:") {
                Some(path) if !path.is_empty() => Ok(ModelChoice::Finite(PathBuf::from(path))),
                _ => Err(format!("unknown model {s:?}; expected full, leftright or finite:<file>")),
            },
        }
    }
}

impl<'de> Deserialize<'de> for ModelChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Threshold overrides; omitted fields keep their defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsFile {
    pub rank_tol: Option<f64>,
    pub unstable_value_ratio: Option<f64>,
    pub unstable_condition: Option<f64>,
    pub plateau_window: Option<usize>,
    pub plateau_rel_change: Option<f64>,
    pub plateau_residual_ratio: Option<f64>,
    pub plateau_condition: Option<f64>,
    pub stabilizer_tol: Option<f64>,
    pub conjugation_tol: Option<f64>,
}

impl ThresholdsFile {
    pub fn apply(&self, base: Thresholds) -> Thresholds {
        Thresholds {
            rank_tol: self.rank_tol.unwrap_or(base.rank_tol),
            unstable_value_ratio: self.unstable_value_ratio.unwrap_or(base.unstable_value_ratio),
            unstable_condition: self.unstable_condition.unwrap_or(base.unstable_condition),
            plateau_window: self.plateau_window.unwrap_or(base.plateau_window),
            plateau_rel_change: self.plateau_rel_change.unwrap_or(base.plateau_rel_change),
            plateau_residual_ratio: self.plateau_residual_ratio.unwrap_or(base.plateau_residual_ratio),
            plateau_condition: self.plateau_condition.unwrap_or(base.plateau_condition),
            stabilizer_tol: self.stabilizer_tol.unwrap_or(base.stabilizer_tol),
            conjugation_tol: self.conjugation_tol.unwrap_or(base.conjugation_tol),
        }
    }
}

/// Contents of a `--config` file. Relative finite-set paths resolve against
/// the config file's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<ModelChoice>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub thresholds: Option<ThresholdsFile>,
}

/// Flags that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub model: Option<ModelChoice>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub thresholds: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelChoice,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub thresholds: Thresholds,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        line: e.line() as u64,
        column: e.column(),
        message: e.to_string(),
    })
}

impl RunConfig {
    pub fn resolve(flags: &Overrides) -> CliResult<Self> {
        let file: ConfigFile = match &flags.config {
            Some(path) => {
                let mut file: ConfigFile = read_json(path)?;
                if let Some(ModelChoice::Finite(rel)) = &file.model {
                    if rel.is_relative() {
                        let base = path.parent().unwrap_or(Path::new(""));
                        file.model = Some(ModelChoice::Finite(base.join(rel)));
                    }
                }
                file
            }
            None => ConfigFile::default(),
        };
        let mut thresholds = file.thresholds.unwrap_or_default().apply(Thresholds::default());
        if let Some(path) = &flags.thresholds {
            thresholds = read_json::<ThresholdsFile>(path)?.apply(thresholds);
        }
        let defaults = EstimateOptions::default();
        let config = RunConfig {
            model: flags.model.clone().or(file.model).unwrap_or(ModelChoice::Full),
            tol: flags.tol.or(file.tol).unwrap_or(defaults.tol),
            max_iter: flags.max_iter.or(file.max_iter).unwrap_or(defaults.max_iter),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            thresholds,
        };
        if !(config.tol > 0.0) || !config.tol.is_finite() {
            return Err(CliError::Config(format!("tol must be positive, got {}", config.tol)));
        }
        if config.max_iter == 0 {
            return Err(CliError::Config("max_iter must be at least 1".into()));
        }
        config.thresholds.validate()?;
        Ok(config)
    }

    pub fn options(&self) -> EstimateOptions {
        EstimateOptions { tol: self.tol, max_iter: self.max_iter, thresholds: self.thresholds.clone() }
    }

    /// The group model for `data`, with dimensions taken from the data.
    pub fn model_for(&self, data: &Dataset) -> CliResult<GroupModelSpec> {
        let (p, q) = data.shape();
        Ok(match &self.model {
            ModelChoice::Full => GroupModelSpec::full(p),
            ModelChoice::LeftRight => GroupModelSpec::left_right(p, q),
            ModelChoice::Finite(path) => read_finite_set(path)?,
        })
    }
}

fn to_matrix(rows: &[Vec<f64>], what: &str) -> CliResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(CliError::Config(format!("{what} must be a non-empty rectangular array of rows")));
    }
    Ok(DMatrix::from_row_iterator(n, m, rows.iter().flatten().copied()))
}

/// A JSON array of row-major matrices with `|det| = 1`.
pub fn read_finite_set(path: &Path) -> CliResult<GroupModelSpec> {
    let raw: Vec<Vec<Vec<f64>>> = read_json(path)?;
    let elements = raw
        .iter()
        .enumerate()
        .map(|(i, rows)| to_matrix(rows, &format!("element {i}")))
        .collect::<CliResult<Vec<_>>>()?;
    GroupModelSpec::finite(elements)
        .map_err(|e| CliError::Json { path: path.display().to_string(), message: e.to_string() })
}

/// Distribution parameters for `sample` and `loglik`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ParamsFile {
    Vector { sigma: Vec<Vec<f64>> },
    Matrix { sigma1: Vec<Vec<f64>>, sigma2: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Vector(MultivariateLaplaceParams),
    Matrix(MatrixLaplaceParams),
}

pub fn read_params(path: &Path) -> CliResult<Params> {
    Ok(match read_json::<ParamsFile>(path)? {
        ParamsFile::Vector { sigma } => Params::Vector(MultivariateLaplaceParams::new(to_matrix(&sigma, "sigma")?)?),
        ParamsFile::Matrix { sigma1, sigma2 } => {
            Params::Matrix(MatrixLaplaceParams::new(to_matrix(&sigma1, "sigma1")?, to_matrix(&sigma2, "sigma2")?)?)
        }
    })
}
