use thiserror::Error;
use topocorr::Error as CoreError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_ASSUMPTION: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Input { path: String, source: CoreError },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input { .. } => EXIT_CONFIG,
            CliError::Core(e) => match e {
                CoreError::AssumptionViolated { .. } | CoreError::NotMarkov { .. } => EXIT_ASSUMPTION,
                CoreError::ConvergenceFailure { .. } => EXIT_CONVERGENCE,
                CoreError::DuplicateLabel(_)
                | CoreError::UnknownSubsystem(_)
                | CoreError::InvalidLayout(_)
                | CoreError::OverlappingRegions(_)
                | CoreError::InvalidLattice(_)
                | CoreError::InvalidMask(_)
                | CoreError::DenseLimitExceeded { .. } => EXIT_CONFIG,
                _ => EXIT_OTHER,
            },
            CliError::Output { .. } => EXIT_OTHER,
        }
    }
}
