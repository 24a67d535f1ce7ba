//! Regularized two-local Hamiltonians whose Gibbs states approach a merged state.

use crate::entropy::trace_distance;
use crate::error::Result;
use crate::layout::FactorLayout;
use crate::linalg::{gibbs, hermitize, CMat};
use crate::markov::ChainState;
use crate::state::DensityMatrix;

/// Regularizers for the default convergence scan.
pub const EPS_LADDER: [f64; 3] = [1e-2, 1e-4, 1e-6];

#[derive(Debug, Clone)]
pub struct TwoLocalHamiltonian {
    pub layout: FactorLayout,
    /// Each term acts on the sites of its layout, in that order.
    pub terms: Vec<(FactorLayout, CMat)>,
    pub eps: f64,
}

impl TwoLocalHamiltonian {
    pub fn total(&self) -> Result<CMat> {
        let d = self.layout.total_dim();
        let mut h = CMat::zeros(d, d);
        for (sub, t) in &self.terms {
            h += self.layout.embed(sub, t)?;
        }
        Ok(hermitize(&h))
    }

    pub fn gibbs_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::normalized(self.layout.clone(), gibbs(&self.total()?))
    }
}

/// One term per link of the chain, with `log ε` on unsupported subspaces.
pub fn two_local_hamiltonian(chain: &ChainState, eps: f64) -> Result<TwoLocalHamiltonian> {
    let sites = chain.sites.iter().skip(1).try_fold(chain.sites[0].layout.clone(), |acc, s| acc.concat(&s.layout))?;
    let layout = FactorLayout::from_sites(
        chain.order.iter().map(|l| Ok(sites.sites()[sites.position(l)?].clone())).collect::<Result<_>>()?,
    )?;
    Ok(TwoLocalHamiltonian { layout, terms: chain.link_terms(eps)?, eps })
}

/// Trace distance between the Gibbs state at each regularizer and `target`.
pub fn eps_ladder(chain: &ChainState, target: &DensityMatrix, eps: &[f64]) -> Result<Vec<(f64, f64)>> {
    eps.iter()
        .map(|&e| {
            let g = two_local_hamiltonian(chain, e)?.gibbs_state()?.reorder(&target.labels())?;
            Ok((e, trace_distance(&g, target)?))
        })
        .collect()
}
