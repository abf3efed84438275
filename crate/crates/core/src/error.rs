use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("column {0} has (near) zero norm")]
    ZeroColumn(usize),
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("parse error on line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("ragged rows: line {line} has {found} fields, expected {expected}")]
    RaggedRows {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("empty file")]
    EmptyFile,
    #[error("labels: {0}")]
    Labels(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("column {0} is orthogonal to every other column; gamma is undefined")]
    DegenerateCoherence(usize),
    #[error("solver did not converge in {max_iters} iterations (kkt residual {kkt_residual:e})")]
    NotConverged {
        max_iters: usize,
        best: Vec<f64>,
        kkt_residual: f64,
    },
    #[error(
        "{} column(s) failed; first: column {}: {}",
        .0.len(),
        .0[0].0,
        .0[0].1
    )]
    Columns(Vec<(usize, SolverError)>),
    #[error("point {0} is not an inlier")]
    NotAnInlier(usize),
    #[error("subspace {0} has fewer than two points")]
    SingletonSubspace(usize),
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error("data matrix needs at least two columns")]
    TooFewPoints,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(
        "{} state(s) have an all-zero representation (first: {}); the representation is nonzero only when alpha > 1",
        .0.len(),
        .0.first().copied().unwrap_or_default()
    )]
    DanglingStates(Vec<usize>),
    #[error("matrix file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("initial distribution is not a probability vector: {0}")]
    InvalidDistribution(String),
    #[error("number of steps must be positive")]
    ZeroSteps,
}

#[derive(Debug, Error)]
pub enum MarkovError {
    #[error("restriction is not a closed class: row {row} sums to {sum}")]
    NotClosedClass { row: usize, sum: f64 },
    #[error("singular linear system ({0})")]
    SingularSystem(&'static str),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("point {0} has zero similarity to every other point")]
    ZeroSimilarityRow(usize),
    #[error("damping must lie in [0, 1), got {0}")]
    InvalidDamping(f64),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("labels must contain at least one inlier and one outlier")]
    DegenerateLabels,
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("trial {trial} failed: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

/// Crate-level error; the variant names the module an error came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("elasticnet: {0}")]
    Solver(#[from] SolverError),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("walk: {0}")]
    Walk(#[from] WalkError),
    #[error("markov: {0}")]
    Markov(#[from] MarkovError),
    #[error("baselines: {0}")]
    Baseline(#[from] BaselineError),
    #[error("eval: {0}")]
    Eval(#[from] EvalError),
}

impl Error {
    /// Name of the module that produced the error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Dataset(_) => "dataset",
            Error::Solver(_) => "elasticnet",
            Error::Graph(_) => "graph",
            Error::Walk(_) => "walk",
            Error::Markov(_) => "markov",
            Error::Baseline(_) => "baselines",
            Error::Eval(_) => "eval",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
