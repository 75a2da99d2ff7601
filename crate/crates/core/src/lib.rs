//! Distance covariance and distance correlation for paired observations in
//! arbitrary metric spaces.
//!
//! * [`metric`]: distance matrices, the metric catalog, file loaders.
//! * [`population`]: exact operators on finite-support (signed) measures.
//! * [`estimators`]: V- and U-statistic estimators and their brute-force oracles.
//! * [`negtype`]: negative-type checks, Schoenberg embedding, null directions.
//! * [`inference`]: permutation test and spectral null approximation.

pub mod error;
pub mod estimators;
pub mod inference;
pub mod linalg;
pub mod metric;
pub mod negtype;
pub mod population;
pub mod sum;

pub use error::{Error, Result};
pub use estimators::{
    brownian_plugin, brute_force_u, brute_force_v, dcor_u, dcor_v, dcov_u, dcov_v, dvar_u, dvar_v,
    kernel_f, kernel_h, u_center, v_center, CenteredMatrices, Centering, PairedSample,
};
pub use inference::{
    permutation_test, spectral_null, sum_lambda_diagnostic, LambdaDiagnostic, Method, SpectralNull,
    Statistic, TestResult,
};
pub use metric::{
    build_distance_matrix, load_matrix, validate_metric, DistanceMatrix, GraphSpec, MatrixFormat,
    MetricSpec, Point, ValidationReport,
};
pub use negtype::{
    find_null_measure_pair, negative_type_check, schoenberg_embed, Embedding, NegTypeReport,
};
pub use population::{
    a_mu, big_d, construct_counterexample, d_mu, hahn_jordan, population_dcor, population_dcov,
    population_dvar, product_measure, FiniteJointMeasure, FiniteSignedMeasure,
};
