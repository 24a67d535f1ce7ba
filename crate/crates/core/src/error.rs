use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown subsystem `{0}`")]
    UnknownSubsystem(String),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("layouts differ: {0}")]
    LayoutMismatch(String),
    #[error("support of the first state is not contained in the support of the second (leaked weight {leak:.3e})")]
    SupportMismatch { leak: f64 },
    #[error("regions overlap on `{0}`")]
    OverlappingRegions(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid region mask: {0}")]
    InvalidMask(String),
    #[error("dense representation of {qubits} qubits exceeds the limit of {limit}")]
    DenseLimitExceeded { qubits: usize, limit: usize },
    #[error("marginal mismatch: trace distance {distance:.3e} between supplied and computed marginal")]
    InconsistentMarginal { distance: f64 },
    #[error("state is not a quantum Markov state: I(A:C|B) = {cmi:.3e} exceeds {tol:.1e}")]
    NotMarkov { cmi: f64, tol: f64 },
    #[error("decomposition failed: {0}")]
    DecompositionFailed(String),
    #[error("assumption violated: {quantity} = {value:.3e} exceeds {tol:.1e}")]
    AssumptionViolated { quantity: String, value: f64, tol: f64 },
    #[error("no convergence after {iterations} iterations (marginal residual {residual:.3e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },
    #[error("near-degenerate eigenvalues {0:.3e} and {1:.3e} were not grouped; loosen rel_tol")]
    DegeneracyAmbiguous(f64, f64),
    #[error("decode error: {0}")]
    Decode(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
