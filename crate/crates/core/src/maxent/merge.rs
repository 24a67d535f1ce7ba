//! Closed-form maximum-entropy merges for annulus and ring splittings.

use serde::{Deserialize, Serialize};

use crate::entropy::{conditional_mutual_information, mutual_information, trace_distance};
use crate::error::{Error, Result};
use crate::markov::{markov_decompose, petz_recovery, ChainSite, ChainState};
use crate::state::DensityMatrix;

/// Tolerance on the Markov and independence assumptions.
pub const ASSUMPTION_TOL: f64 = 1e-7;
/// The cyclic weights must sum to one within this.
pub const WEIGHT_TOL: f64 = 1e-9;
/// Two-party marginals of a merge must match the input within this.
pub const MARGINAL_MATCH_TOL: f64 = 1e-7;

/// A named assumption and how far the state is from satisfying it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub tol: f64,
}

impl Residual {
    fn new(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value, tol: ASSUMPTION_TOL }
    }

    pub fn holds(&self) -> bool {
        self.value <= self.tol
    }
}

fn first_violation(res: &[Residual]) -> Result<()> {
    match res.iter().find(|r| !r.holds()) {
        Some(r) => Err(Error::AssumptionViolated { quantity: r.name.clone(), value: r.value, tol: r.tol }),
        None => Ok(()),
    }
}

fn join(parts: &[&[String]]) -> Vec<String> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

/// Tripartition `A B C` with `B = B1 ∪ B2`, where `B1` touches `A` and `B2` touches `C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSplit {
    pub a: Vec<String>,
    pub b1: Vec<String>,
    pub b2: Vec<String>,
    pub c: Vec<String>,
}

impl AnnulusSplit {
    pub fn b(&self) -> Vec<String> {
        join(&[&self.b1, &self.b2])
    }

    pub fn labels(&self) -> Vec<String> {
        join(&[&self.a, &self.b1, &self.b2, &self.c])
    }

    /// `I(A:B2|B1)`, `I(B1:C|B2)` and `I(A:B2C)`.
    pub fn residuals(&self, rho: &DensityMatrix) -> Result<Vec<Residual>> {
        Ok(vec![
            Residual::new("I(A:B2|B1)", conditional_mutual_information(rho, &self.a, &self.b1, &self.b2)?),
            Residual::new("I(B1:C|B2)", conditional_mutual_information(rho, &self.b1, &self.b2, &self.c)?),
            Residual::new("I(A:B2C)", mutual_information(rho, &self.a, &join(&[&self.b2, &self.c]))?),
        ])
    }

    /// `(id_{A B1} ⊗ Λ_{B2→B2 C}) ρ_{A B1 B2}` without checking the assumptions.
    pub fn merge_unchecked(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let b2c = join(&[&self.b2, &self.c]);
        let map =
            petz_recovery(&rho.partial_trace(&b2c)?.reorder(&b2c)?, &rho.partial_trace(&self.b2)?.reorder(&self.b2)?)?;
        let merged = map.apply(&rho.partial_trace(&join(&[&self.a, &self.b1, &self.b2]))?)?;
        let all = self.labels();
        let order: Vec<String> = rho.labels().into_iter().filter(|l| all.contains(l)).collect();
        merged.reorder(&order)
    }
}

/// Maximum-entropy state with the two-party marginals of `ρ` on `A`, `B`, `C`.
pub fn merge_annulus(rho: &DensityMatrix, split: &AnnulusSplit) -> Result<DensityMatrix> {
    first_violation(&split.residuals(rho)?)?;
    split.merge_unchecked(rho)
}

/// Six consecutive sub-regions around a ring; `A = X1 X2`, `B = X3 X4`, `C = X5 X6`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingSplit {
    pub parts: Vec<Vec<String>>,
}

impl RingSplit {
    pub fn new(parts: Vec<Vec<String>>) -> Result<Self> {
        if parts.len() != 6 || parts.iter().any(|p| p.is_empty()) {
            return Err(Error::InvalidLayout("a ring split needs six nonempty parts".into()));
        }
        Ok(Self { parts })
    }

    fn part(&self, k: isize) -> &[String] {
        &self.parts[k.rem_euclid(6) as usize]
    }

    pub fn a(&self) -> Vec<String> {
        join(&[&self.parts[0], &self.parts[1]])
    }

    pub fn b(&self) -> Vec<String> {
        join(&[&self.parts[2], &self.parts[3]])
    }

    pub fn c(&self) -> Vec<String> {
        join(&[&self.parts[4], &self.parts[5]])
    }

    /// Markov condition on every consecutive triple and independence of
    /// every non-adjacent pair.
    pub fn residuals(&self, rho: &DensityMatrix) -> Result<Vec<Residual>> {
        let mut out = Vec::new();
        for k in 0..6isize {
            let cmi = conditional_mutual_information(rho, self.part(k - 1), self.part(k), self.part(k + 1))?;
            out.push(Residual::new(format!("I(X{}:X{}|X{})", (k + 5) % 6 + 1, (k + 1) % 6 + 1, k + 1), cmi));
        }
        for i in 0..6 {
            for j in i + 2..6 {
                if i == 0 && j == 5 {
                    continue;
                }
                out.push(Residual::new(
                    format!("I(X{}:X{})", i + 1, j + 1),
                    mutual_information(rho, &self.parts[i], &self.parts[j])?,
                ));
            }
        }
        Ok(out)
    }

    /// Cyclic chain of the six sites, each decomposed along its neighbours.
    pub fn chain(&self, rho: &DensityMatrix, seed: u64) -> Result<ChainState> {
        let sites = (0..6isize)
            .map(|k| {
                let dec = markov_decompose(
                    rho,
                    self.part(k - 1),
                    self.part(k),
                    self.part(k + 1),
                    seed.wrapping_add(k as u64),
                )?;
                Ok(ChainSite::from_decomposition(&dec))
            })
            .collect::<Result<Vec<_>>>()?;
        ChainState::build(rho, sites, true)
    }
}

#[derive(Debug, Clone)]
pub struct RingMerge {
    pub state: DensityMatrix,
    pub chain: ChainState,
    pub residuals: Vec<Residual>,
}

/// Largest trace distance between the `AB`, `BC`, `CA` marginals of two states.
pub fn pair_marginal_gap(
    x: &DensityMatrix,
    y: &DensityMatrix,
    a: &[String],
    b: &[String],
    c: &[String],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for pair in [join(&[a, b]), join(&[b, c]), join(&[c, a])] {
        worst = worst.max(trace_distance(&x.partial_trace(&pair)?, &y.partial_trace(&pair)?)?);
    }
    Ok(worst)
}

/// Ring merge `⊕ p(i1|i6) p(i2|i1) ⋯ p(i6|i5) ⊗_k ρ_{X_k^R X_{k+1}^L}`.
pub fn merge_ring(rho: &DensityMatrix, split: &RingSplit, seed: u64) -> Result<RingMerge> {
    let residuals = split.residuals(rho)?;
    first_violation(&residuals)?;
    let chain = split.chain(rho, seed)?;
    let total = chain.total_weight();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::DecompositionFailed(format!("cyclic weights sum to {total}")));
    }
    let state = chain.assemble()?;
    let all = join(&[&split.a(), &split.b(), &split.c()]);
    let source = rho.partial_trace(&all)?;
    let gap = pair_marginal_gap(&state, &source, &split.a(), &split.b(), &split.c())?;
    if gap > MARGINAL_MATCH_TOL {
        return Err(Error::DecompositionFailed(format!("merged two-party marginals differ by {gap:.3e}")));
    }
    Ok(RingMerge { state, chain, residuals })
}
