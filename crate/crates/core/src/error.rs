//! Error types shared across the crate.

use thiserror::Error;

/// Errors surfaced by the statistical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sample '{label}' has {rows} rows; at least 2 observations are required")]
    DegenerateSample { label: String, rows: usize },

    #[error("sample '{label}' has a non-finite value at row {row}, column {col}")]
    NonFiniteInput {
        label: String,
        row: usize,
        col: usize,
    },

    #[error("samples have different column counts: {p1} vs {p2}")]
    ColumnMismatch { p1: usize, p2: usize },

    #[error("dimension p = {p} must be smaller than n1 + n2 = {n} so the pooled scatter is invertible")]
    Dimension { p: usize, n: usize },

    #[error("pooled scatter matrix is numerically singular (Cholesky factorization failed)")]
    IllConditioned,

    #[error("{boundary} eigenvalue count mismatch: observed {observed}, expected {expected}; input data are rank deficient")]
    EigenvalueCount {
        boundary: &'static str,
        observed: usize,
        expected: usize,
    },

    #[error("eigenvalue {value} lies outside [-10t, 1+10t] for clamp tolerance t = {tolerance}")]
    EigenvalueRange { value: f64, tolerance: f64 },

    #[error("assumption violated: {what}")]
    AssumptionViolation { what: String },

    #[error("calibration produced non-positive variance nu_n^2 = {nu2}")]
    Calibration { nu2: f64 },

    #[error("spectrum has no interior eigenvalues; every eigenvalue is clamped to the boundary")]
    EmptyInterior,

    #[error("sample '{label}' has {rows} rows; this operation requires at least {required}")]
    SampleTooSmall {
        label: String,
        rows: usize,
        required: usize,
    },

    #[error("variance estimate {name} = {value} is not positive (degenerate data)")]
    DegenerateVariance { name: &'static str, value: f64 },

    #[error("moment estimation requires gamma = p/(n1+n2-1) < 1, got {gamma}")]
    GammaRatio { gamma: f64 },

    #[error("invalid configuration: {msg}")]
    InvalidConfig { msg: String },

    #[error("non-finite intermediate value in {context}")]
    NonFiniteResult { context: &'static str },

    #[error("replication {rep} (seed {rep_seed:#018x}) failed: {source}")]
    Replication {
        rep: usize,
        rep_seed: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
