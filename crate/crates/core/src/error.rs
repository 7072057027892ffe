use thiserror::Error;

/// Errors raised by the library. Each variant maps to one failure mode of a
/// public operation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("distance matrix needs at least 2 points, got {0}")]
    TooSmall(usize),
    #[error("distance matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("asymmetric input: |d[{i}][{j}] - d[{j}][{i}]| = {diff:e}")]
    AsymmetricInput { i: usize, j: usize, diff: f64 },
    #[error("nonzero diagonal entry d[{i}][{i}] = {value}")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("off-diagonal entry d[{i}][{j}] = {value} is not positive")]
    NonpositiveOffDiagonal { i: usize, j: usize, value: f64 },
    #[error("non-finite entry at ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("label count {labels} does not match point count {points}")]
    LabelMismatch { labels: usize, points: usize },
    #[error("negative exponent {0}")]
    NegativeExponent(f64),
    #[error("bad exponent {0}")]
    BadExponent(f64),
    #[error("graph is disconnected: vertex {0} is unreachable from vertex 0")]
    DisconnectedGraph(usize),
    #[error("invalid graph: {0}")]
    BadGraph(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("witness coefficients do not sum to zero (sum = {0:e})")]
    NotMeanZero(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("matrix is not in the certificate cone: {0}")]
    NotInCone(String),
    #[error("certificate has no negative off-diagonal mass")]
    ZeroDenominator,
    #[error("points {i} and {j} have coincident images")]
    CoincidentImages { i: usize, j: usize },
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("certificate search fell short: best ratio {best} < required {required}")]
    SearchFailure { best: f64, required: f64 },
    #[error("brute-force oracle limited to {max} points, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
