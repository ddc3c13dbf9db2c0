use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("constant term present: the polynomial must vanish at the origin")]
    ConstantTermPresent,
    #[error("io error: {0}")]
    Io(String),

    #[error("not extendable to a unimodular basis: {0}")]
    NotExtendable(String),
    #[error("matrix is not unimodular: {0}")]
    NotUnimodular(String),

    #[error("ambient dimension {0} exceeds the supported maximum")]
    DimensionTooLarge(usize),
    #[error("point {0} is not in the given lattice")]
    PointsOffLattice(String),

    #[error("Newton polytope has dimension {dim} < {n}")]
    NotFullDimensional { dim: usize, n: usize },

    #[error("chart rejected: {0}")]
    ChartInvalid(String),
    #[error("no admissible chart found within the search budget for face {0}")]
    NoPositiveCompletion(String),
    #[error("the two cone-membership tests disagree for {0}")]
    InconsistentDuality(String),
    #[error("cone subdivision exceeded its step budget")]
    SubdivisionBudgetExceeded,

    #[error("negative power with no affine factor in term {0}")]
    ExpansionPole(String),

    #[error("solver budget exhausted: {0}")]
    SolverBudgetExhausted(String),

    #[error("facet selection did not stabilise under truncation deepening")]
    FacetUnstable,
    #[error("no facet of the local Newton polyhedron qualifies: {0}")]
    NoQualifyingFacet(String),
    #[error("condition (mu) fails for q' = {0}")]
    MuViolated(String),
    #[error("order-0 system has no admissible solution: {0}")]
    Order0SolveFailed(String),
    #[error("linear system at order {order} is inconsistent: {detail}")]
    LinearSolveInconsistent { order: usize, detail: String },

    #[error("order condition fails for index {j}: spread {spread} + order {order} <= 0")]
    OrderShortfall { j: usize, spread: i64, order: i64 },
    #[error("numeric overflow while sampling the curve")]
    NumericOverflow,
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl Error {
    /// Module that raised the error, used to tag reports.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            Parse(_) | ConstantTermPresent | Io(_) => "cli-io",
            NotExtendable(_) | NotUnimodular(_) => "exact-lattice",
            DimensionTooLarge(_) | PointsOffLattice(_) => "polyhedra",
            NotFullDimensional { .. } => "newton-analysis",
            ChartInvalid(_) | NoPositiveCompletion(_) | InconsistentDuality(_) | SubdivisionBudgetExceeded => {
                "toric-chart"
            }
            ExpansionPole(_) => "laurent",
            SolverBudgetExhausted(_) => "critical-points",
            FacetUnstable | NoQualifyingFacet(_) | MuViolated(_) | Order0SolveFailed(_) | LinearSolveInconsistent { .. } => {
                "curve-engine"
            }
            OrderShortfall { .. } | NumericOverflow | VerificationFailed(_) => "verifier",
        }
    }

    /// Variant name, for tagging reports.
    pub fn kind(&self) -> String {
        let debug = format!("{self:?}");
        debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
    }

    /// Process exit code: 2 parse, 3 contract violation, 4 budget exhausted.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            Parse(_) | ConstantTermPresent | Io(_) => 2,
            SolverBudgetExhausted(_)
            | SubdivisionBudgetExceeded
            | NoPositiveCompletion(_)
            | FacetUnstable
            | Order0SolveFailed(_) => 4,
            _ => 3,
        }
    }
}
