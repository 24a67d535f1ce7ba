//! Maximum-entropy states over marginal constraints and the correlation
//! measures built on them.

pub mod constraints;
pub mod correlation;
pub mod hamiltonian;
pub mod iterative;
pub mod merge;

pub use constraints::{MarginalConstraintSet, Parties, Target};
pub use correlation::{
    correlation_profile, distance_dk, irreducible_correlation, tee_dense, CorrelationProfile, CorrelationReport,
    Regions, CSV_HEADER,
};
pub use hamiltonian::{eps_ladder, two_local_hamiltonian, TwoLocalHamiltonian, EPS_LADDER};
pub use iterative::{iterative_maxent, solve, uniqueness_spread, MaxEntSolution, SolverOptions};
pub use merge::{
    merge_annulus, merge_ring, pair_marginal_gap, AnnulusSplit, Residual, RingMerge, RingSplit, ASSUMPTION_TOL,
    MARGINAL_MATCH_TOL,
};
