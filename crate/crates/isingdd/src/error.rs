use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time {t} outside pulse support [0, {duration}]")]
    OutsideSupport { t: f64, duration: f64 },
    #[error("pulse shape is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("infeasible harmonic count: need at least {needed}, got {got}")]
    InfeasibleHarmonics { needed: usize, got: usize },
    #[error("self-refocusing search did not converge (best residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("graph is not bipartite: {0}")]
    NotBipartite(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("dimension 2^{0} exceeds the dense limit 2^10")]
    DimensionOverflow(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unitarity defect {defect:e} exceeds {limit:e}")]
    UnitarityDefect { defect: f64, limit: f64 },
    #[error("non-finite value encountered during propagation")]
    NotFinite,
    #[error("eigenphase {phase} lies within {margin:e} of the branch cut")]
    BranchCut { phase: f64, margin: f64 },
    #[error("formula assumption violated: {name} = {value:e} must vanish")]
    Assumption { name: &'static str, value: f64 },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("series diverges: e*alpha*mu = {0} >= 1")]
    Divergent(f64),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
