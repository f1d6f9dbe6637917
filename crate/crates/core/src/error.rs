use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the point-process samplers and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PointProcError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("Palm sampling failed after {attempts} attempts")]
    SamplingFailure { attempts: usize },
    #[error("malformed point set: {0}")]
    Format(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("duplicate point at index {0}")]
    DuplicatePoint(usize),
    #[error("dimension {0} is not supported by the triangulator")]
    UnsupportedDimension(usize),
    #[error("vertex {0} out of range")]
    InvalidVertex(usize),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("malformed graph: {0}")]
    Format(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("consistency error: {0}")]
    Consistency(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("vertex {0} out of range")]
    InvalidVertex(usize),
    #[error("vertex {0} has no neighbours")]
    Isolated(usize),
    #[error("start vertex {0} is not a good point")]
    NotGood(usize),
    #[error("hole {hole} ({size} vertices) touches the window boundary; absorption is undefined")]
    Truncation { hole: usize, size: usize },
    #[error("walk trapped for {steps} steps inside a hole")]
    Trapped { steps: usize },
    #[error("linear solve failed: {0}")]
    Solver(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrectorError {
    #[error("interior component containing vertex {0} has no boundary contact")]
    Singular(usize),
    #[error("solver did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("kernel row missing for vertex {0}")]
    MissingRow(usize),
    #[error("uniformization needs {needed} kernel applications; cap t at about {suggested_t_cap}")]
    Resource { needed: usize, suggested_t_cap: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    PointProc(#[from] PointProcError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Corrector(#[from] CorrectorError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}
