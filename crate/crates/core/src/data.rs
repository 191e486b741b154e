//! Complete samples `(y_i, w_i)` and `(X_i, w_i)` with validated weights.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::vec_of;

/// Smallest accepted weight; `1 / w` must stay finite.
pub const MIN_WEIGHT: f64 = 1e-300;

/// Shared behaviour of the two complete-sample containers.
pub trait WeightedSample {
    type Sample: Clone;

    fn samples(&self) -> &[Self::Sample];
    fn weights(&self) -> &[f64];
    fn scale_sample(sample: &Self::Sample, factor: f64) -> Self::Sample;

    fn len(&self) -> usize {
        self.weights().len()
    }

    fn is_empty(&self) -> bool {
        self.weights().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedVectorData {
    samples: Vec<DVector<f64>>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMatrixData {
    samples: Vec<DMatrix<f64>>,
    weights: Vec<f64>,
}

fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("a sample needs at least one observation".into()));
    }
    if weights.len() != n {
        return Err(Error::DimensionMismatch(format!("{n} samples but {} weights", weights.len())));
    }
    for (index, &value) in weights.iter().enumerate() {
        if !value.is_finite() || value < MIN_WEIGHT {
            return Err(Error::InvalidWeight { index, value });
        }
    }
    Ok(())
}

impl WeightedVectorData {
    pub fn new(samples: Vec<DVector<f64>>, weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights, samples.len())?;
        let p = samples[0].len();
        if p == 0 {
            return Err(Error::DimensionMismatch("samples must have length >= 1".into()));
        }
        for (i, y) in samples.iter().enumerate() {
            if y.len() != p {
                return Err(Error::DimensionMismatch(format!("sample {i} has length {}, expected {p}", y.len())));
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("sample {i} has non-finite entries")));
            }
        }
        Ok(Self { samples, weights })
    }

    /// Builds data from row slices, one per sample.
    pub fn from_rows(rows: &[&[f64]], weights: &[f64]) -> Result<Self> {
        let samples = rows.iter().map(|r| DVector::from_column_slice(r)).collect();
        Self::new(samples, weights.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    /// `sum_i y_i y_i^T / w_i`.
    pub fn scatter(&self) -> DMatrix<f64> {
        let p = self.dim();
        let mut s = DMatrix::zeros(p, p);
        for (y, &w) in self.samples.iter().zip(&self.weights) {
            s.ger(1.0 / w, y, y, 1.0);
        }
        s
    }
}

impl WeightedMatrixData {
    pub fn new(samples: Vec<DMatrix<f64>>, weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights, samples.len())?;
        let shape = samples[0].shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::DimensionMismatch("samples must be at least 1x1".into()));
        }
        for (i, x) in samples.iter().enumerate() {
            if x.shape() != shape {
                return Err(Error::DimensionMismatch(format!(
                    "sample {i} is {}x{}, expected {}x{}",
                    x.nrows(),
                    x.ncols(),
                    shape.0,
                    shape.1
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("sample {i} has non-finite entries")));
            }
        }
        Ok(Self { samples, weights })
    }

    pub fn rows(&self) -> usize {
        self.samples[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.samples[0].ncols()
    }

    /// The same sample with every `X_i` replaced by `vec(X_i)`.
    pub fn vectorized(&self) -> WeightedVectorData {
        WeightedVectorData { samples: self.samples.iter().map(vec_of).collect(), weights: self.weights.clone() }
    }
}

impl WeightedSample for WeightedVectorData {
    type Sample = DVector<f64>;

    fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn scale_sample(sample: &DVector<f64>, factor: f64) -> DVector<f64> {
        sample * factor
    }
}

impl WeightedSample for WeightedMatrixData {
    type Sample = DMatrix<f64>;

    fn samples(&self) -> &[DMatrix<f64>] {
        &self.samples
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn scale_sample(sample: &DMatrix<f64>, factor: f64) -> DMatrix<f64> {
        sample * factor
    }
}

/// Either kind of complete sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Vector(WeightedVectorData),
    Matrix(WeightedMatrixData),
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Vector(d) => d.len(),
            Dataset::Matrix(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(p, q)`, with `q = 1` for vector data.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Dataset::Vector(d) => (d.dim(), 1),
            Dataset::Matrix(d) => (d.rows(), d.cols()),
        }
    }
}

impl From<WeightedVectorData> for Dataset {
    fn from(d: WeightedVectorData) -> Self {
        Dataset::Vector(d)
    }
}

impl From<WeightedMatrixData> for Dataset {
    fn from(d: WeightedMatrixData) -> Self {
        Dataset::Matrix(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_weights() {
        let y = vec![DVector::from_vec(vec![1.0, 0.0])];
        for bad in [0.0, -1.0, 1e-301, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                WeightedVectorData::new(y.clone(), vec![bad]),
                Err(Error::InvalidWeight { index: 0, .. })
            ));
        }
        assert!(WeightedVectorData::new(y, vec![MIN_WEIGHT]).is_ok());
    }

    #[test]
    fn rejects_ragged_and_empty() {
        let ragged = vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![1.0, 2.0])];
        assert!(matches!(WeightedVectorData::new(ragged, vec![1.0, 1.0]), Err(Error::DimensionMismatch(_))));
        assert!(WeightedVectorData::new(vec![], vec![]).is_err());
        let m = vec![DMatrix::zeros(2, 2), DMatrix::zeros(2, 3)];
        assert!(WeightedMatrixData::new(m, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn scatter_examples() {
        let d = WeightedVectorData::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, 1.0]).unwrap();
        assert_eq!(d.scatter(), DMatrix::identity(2, 2));
        let d = WeightedVectorData::from_rows(&[&[2.0, 0.0]], &[1.0]).unwrap();
        assert_eq!(d.scatter(), DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn vectorized_is_column_major() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let d = WeightedMatrixData::new(vec![x], vec![1.0]).unwrap().vectorized();
        assert_eq!(d.samples()[0].as_slice(), &[1.0, 3.0, 2.0, 4.0]);
    }
}
