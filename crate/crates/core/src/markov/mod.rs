//! Quantum Markov states: detection, block decomposition, chains of
//! decompositions and Petz recovery.

pub mod chain;
pub mod decompose;
pub mod recovery;

pub use chain::{ChainSite, ChainState, SiteBlock};
pub use decompose::{is_qms, markov_decompose, MarkovBlock, MarkovDecomposition, QmsCheck, QMS_TOL};
pub use recovery::{apply_recovery, petz_recovery, RecoveryMap};

use crate::error::Result;
use crate::state::DensityMatrix;

/// Doubly indexed refinement `⊕_{ij} p_i q_{j|i} ρ_{A L_i} ⊗ ρ_{R_i L'_j} ⊗ ρ_{R'_j C}`
/// from a decomposition of `B1` in `A B1 B2` and of `B2` in `B1 B2 C`.
pub fn refine_block(
    rho: &DensityMatrix,
    first: &MarkovDecomposition,
    second: &MarkovDecomposition,
) -> Result<ChainState> {
    ChainState::refine(rho, first, second)
}
