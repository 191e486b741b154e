//! JSON reports. Every float is written with 17 significant digits;
//! non-finite values become `null`.

use std::io;

use nalgebra::DMatrix;
use orbitlap::stability::{Diagnostics, StabilityClass};
use orbitlap::{Concentration, MleReport};
use serde::Serialize;
use serde_json::ser::Formatter;

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct SignificantDigits;

impl Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantDigits);
    value.serialize(&mut ser).expect("reports serialize");
    String::from_utf8(out).expect("JSON is UTF-8")
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Serialize)]
pub struct ConcentrationJson {
    /// Full concentration matrix, row-major.
    pub psi: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi1: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi2: Option<Vec<Vec<f64>>>,
}

impl From<&Concentration> for ConcentrationJson {
    fn from(c: &Concentration) -> Self {
        match c {
            Concentration::Full(psi) => Self { psi: rows(psi), psi1: None, psi2: None },
            Concentration::Kronecker { psi1, psi2 } => {
                Self { psi: rows(&c.matrix()), psi1: Some(rows(psi1)), psi2: Some(rows(psi2)) }
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EstimateJson {
    pub model: &'static str,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub alpha: Option<f64>,
    pub c: f64,
    /// Supremum of the complete-data log-likelihood; `null` when unbounded.
    pub objective: f64,
    pub objective_bound: f64,
    pub concentrations: Vec<ConcentrationJson>,
    pub stability: &'static str,
    pub lie_dim: usize,
    pub mle_unique: &'static str,
    pub iterations: usize,
    pub residual: f64,
    pub termination: &'static str,
}

impl EstimateJson {
    pub fn new(report: &MleReport, model: &'static str, n: usize, shape: (usize, usize)) -> Self {
        Self {
            model,
            n,
            p: shape.0,
            q: shape.1,
            alpha: report.alpha,
            c: report.optimizer.inner_value,
            objective: report.objective,
            objective_bound: report.objective_bound,
            concentrations: report.concentrations.iter().map(ConcentrationJson::from).collect(),
            stability: report.stability.kind().as_str(),
            lie_dim: report.stabilizer.lie_dim,
            mle_unique: report.mle_unique.as_str(),
            iterations: report.optimizer.iterations,
            residual: report.optimizer.residual,
            termination: report.optimizer.termination.as_str(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DiagnosticsJson {
    pub inner_value: f64,
    pub initial_value: f64,
    pub residual: f64,
    pub max_condition: f64,
    pub iterations: usize,
    pub reason: String,
}

impl From<&Diagnostics> for DiagnosticsJson {
    fn from(d: &Diagnostics) -> Self {
        Self {
            inner_value: d.inner_value,
            initial_value: d.initial_value,
            residual: d.residual,
            max_condition: d.max_condition,
            iterations: d.iterations,
            reason: d.reason.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ClassifyJson {
    pub model: &'static str,
    pub stability: &'static str,
    pub lie_dim: usize,
    pub diagnostics: DiagnosticsJson,
}

impl ClassifyJson {
    pub fn new(class: &StabilityClass, model: &'static str) -> Self {
        Self {
            model,
            stability: class.kind().as_str(),
            lie_dim: class.diagnostics().lie_dim,
            diagnostics: class.diagnostics().into(),
        }
    }
}

/// Emitted instead of a report when the optimizer budget ran out undecided.
#[derive(Debug, Serialize)]
pub struct InconclusiveJson {
    pub model: &'static str,
    pub stability: &'static str,
    pub iterations: usize,
    pub value: f64,
    pub residual: f64,
    pub condition: f64,
}

#[derive(Debug, Serialize)]
pub struct LoglikJson {
    pub n: usize,
    /// Bessel order `(2 - d) / 2`.
    pub nu: f64,
    /// `-(N/2) ln|Sigma| + (nu/2) sum ln q_i + sum ln K_nu(sqrt(2 q_i))`.
    pub observed: f64,
    /// `N (ln 2 - (d/2) ln(2 pi) - (nu/2) ln 2)`.
    pub observed_constant: f64,
    /// Complete-data log-likelihood at `Psi = Sigma^{-1}`.
    pub complete: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(-2.0), "-2.0000000000000000e0");
        let v: f64 = format_f64(1.0 / 3.0).parse().unwrap();
        assert_eq!(v, 1.0 / 3.0);
    }

    #[test]
    fn json_is_valid_and_nulls_non_finite() {
        let text = to_json(&(vec![0.5, f64::INFINITY], "x"));
        assert_eq!(text, r#"[[5.0000000000000000e-1,null],"x"]"#);
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed[0][0].as_f64(), Some(0.5));
    }
}
