use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph has no vertices")]
    Empty,
    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("edge {{{i}, {j}}} has non-positive or non-finite weight {w}")]
    BadWeight { i: usize, j: usize, w: f64 },
    #[error("graph is disconnected (vertex {0} unreachable from 0)")]
    Disconnected(usize),
    #[error("ordering is not a permutation of 0..{0}")]
    BadOrdering(usize),
    #[error("spanning-tree enumeration refused: n = {n} exceeds the limit {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("malformed graph spec: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    /// The elimination hit a pivot at or below the tolerance. `position` is
    /// the index in the elimination order, `vertex` the graph vertex there.
    #[error("2β − P is not positive definite: pivot {pivot:e} at position {position} (vertex {vertex})")]
    Indefinite {
        position: usize,
        vertex: usize,
        pivot: f64,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("potential entry {index} is not strictly positive ({value})")]
    NonPositiveBeta { index: usize, value: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("{name} must have length {expected}, got {got}")]
    Length {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{name}[{index}] = {value} must be strictly positive and finite")]
    NotPositive {
        name: &'static str,
        index: usize,
        value: f64,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("path is empty")]
    Empty,
    #[error("path must start at {expected}, starts at {got}")]
    WrongStart { expected: usize, got: usize },
    #[error("step {step}: {{{from}, {to}}} is not an edge")]
    NotAnEdge { step: usize, from: usize, to: usize },
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not converge: value {value}, error bound {error_bound:e}")]
    NotConverged { value: f64, error_bound: f64 },
    #[error("unsupported dimension {0} (at most 3)")]
    Dimension(usize),
}

/// A density evaluated outside its support, kept apart from numeric failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error("point lies outside the support (boundary value −∞)")]
    OutsideSupport,
    #[error(transparent)]
    Param(#[from] ParamError),
}
