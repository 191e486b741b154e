//! Maximum likelihood estimation for multivariate and matrix variate
//! symmetric Laplace group models by orbit-norm minimization, with stability
//! classification of the data under the group action.

pub mod data;
pub mod error;
pub mod linalg;
pub mod models;
pub mod oracle;
pub mod orbit;
pub mod sampling;
pub mod special;
pub mod stability;

pub use data::{Dataset, WeightedMatrixData, WeightedSample, WeightedVectorData};
pub use error::{Error, Result};
pub use models::{
    complete_loglik, complete_loglik_matrix, log_joint_pdf, log_pdf_matsl, log_pdf_mvsl, observed_loglik,
    observed_loglik_offset, MatrixLaplaceParams, MultivariateLaplaceParams,
};
pub use orbit::{
    estimate, estimate_with, orbit_norm, Concentration, EstimateOptions, GroupElement, GroupModelSpec, MleReport,
    OptimizerReport, Termination,
};
pub use sampling::{sample_matsl, sample_mvsl, SampleParams, SampleRequest};
pub use special::{bessel_k, log_bessel_k, BesselPoint};
pub use stability::{
    classify, mle_family, stabilizer_lie_dim, MleMultiplicity, StabilityClass, StabilityKind, Thresholds,
};
