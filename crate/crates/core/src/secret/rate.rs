//! Secret-sharing rate at one copy: entropy of the twirled code-book average
//! against the maximum-entropy state, with the eigenvalue-count bound.

use serde::{Deserialize, Serialize};

use super::twirl::{annulus_twirl, link_twirl, TwirlEnsemble};
use crate::entropy::{entropy_of_matrix, von_neumann_entropy};
use crate::error::{Error, Result};
use crate::linalg::{self, kron, shannon, CMat};
use crate::markov::{markov_decompose, MarkovDecomposition};
use crate::maxent::{iterative_maxent, merge_annulus, merge_ring, MarginalConstraintSet, Regions, SolverOptions};
use crate::state::DensityMatrix;

/// Grouping tolerance for eigenvalues of the twirled factors.
pub const RATE_REL_TOL: f64 = 1e-7;

/// Eigenvalue count of the `n`-copy state and two readings of its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopyBound {
    pub n: usize,
    /// `ln` of the number of distinct nonzero eigenvalues of `ρ_T^{⊗n}`.
    pub log_count: f64,
    /// `d_T ln(n+1)`: the count is at most polynomial in `n`.
    pub polynomial: f64,
    /// `d_T ln ln(n+1)`: the bound read with a logarithm inside.
    pub log_of_log: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    #[serde(rename = "S_rho")]
    pub s_rho: f64,
    #[serde(rename = "S_bar")]
    pub s_bar: f64,
    #[serde(rename = "S_tilde")]
    pub s_tilde: f64,
    /// `S_tilde − S_rho`, the rate predicted for many copies.
    #[serde(rename = "C3")]
    pub c3: f64,
    /// `S_bar − S_rho`, the rate reached with one copy.
    pub single_copy_rate: f64,
    /// `ln` of the number of distinct nonzero eigenvalues of the twirled factor(s).
    #[serde(rename = "logD")]
    pub log_d: f64,
    /// `max_i ln D_i` over the blocks of each twirl, summed over twirls.
    pub log_d_blocks: f64,
    /// `S_tilde − S_bar`.
    pub slack: f64,
    /// Closed forms of `S_bar` and `S_tilde` from the block data (single twirl only).
    pub s_bar_closed: Option<f64>,
    pub s_tilde_closed: Option<f64>,
    #[serde(rename = "N_bounds")]
    pub n_bounds: Vec<CopyBound>,
    pub method: String,
}

impl RateReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Distinct values among `values` within `rel_tol` of the largest.
fn distinct(values: &mut [f64], rel_tol: f64) -> usize {
    values.sort_by(|a, b| b.total_cmp(a));
    let scale = values.first().copied().unwrap_or(0.0).abs();
    let mut count = 0;
    let mut lead = f64::NAN;
    for &v in values.iter() {
        if count == 0 || (lead - v).abs() > rel_tol * scale {
            count += 1;
            lead = v;
        }
    }
    count
}

/// Weighted spectrum `⊕_i p_i λ_{K_i}` of the twirled factor, with degeneracies.
fn weighted_spectrum(ens: &TwirlEnsemble) -> Vec<(f64, usize)> {
    ens.blocks
        .iter()
        .flat_map(|b| b.nonzero_eigenvalues().into_iter().map(move |(v, d)| (b.weight * v, d)))
        .filter(|(v, _)| *v > 0.0)
        .collect()
}

fn log_counts(ens: &TwirlEnsemble) -> (f64, f64) {
    let mut all: Vec<f64> = weighted_spectrum(ens).into_iter().map(|(v, _)| v).collect();
    let global = (distinct(&mut all, RATE_REL_TOL).max(1) as f64).ln();
    let per_block = ens.blocks.iter().map(|b| (b.nonzero_eigenvalues().len().max(1) as f64).ln()).fold(0.0, f64::max);
    (global, per_block)
}

/// Number of distinct products of `n` eigenvalues drawn from `values`.
fn copy_count(values: &[f64], n: usize) -> usize {
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mut products = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        products.push(idx.iter().map(|&i| logs[i]).sum::<f64>());
        // next non-decreasing index tuple
        let mut k = n;
        while k > 0 && idx[k - 1] == logs.len() - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        idx[k - 1] += 1;
        let v = idx[k - 1];
        for j in idx.iter_mut().skip(k) {
            *j = v;
        }
    }
    products.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut last = f64::NEG_INFINITY;
    for p in products {
        if count == 0 || p - last > 1e-9 {
            count += 1;
            last = p;
        }
    }
    count
}

fn copy_bounds(ens: &TwirlEnsemble) -> Vec<CopyBound> {
    let d_t: usize = ens.blocks.iter().filter(|b| b.spectrum.is_some()).map(|b| b.t_dim).sum();
    let mut values: Vec<f64> = weighted_spectrum(ens).into_iter().map(|(v, _)| v).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values.dedup_by(|a, b| (*a - *b).abs() <= RATE_REL_TOL * b.abs());
    (1..=3)
        .map(|n| CopyBound {
            n,
            log_count: (copy_count(&values, n).max(1) as f64).ln(),
            polynomial: d_t as f64 * ((n + 1) as f64).ln(),
            log_of_log: d_t as f64 * ((n + 1) as f64).ln().ln(),
        })
        .collect()
}

/// `H(p) + Σ_i p_i H(q_K) + Σ_{i,K} p_i q_K (ln d_K + S(ρ^K))` for the twirled
/// state and the same with `S(ρ_{B_i^R C})` for the maximum-entropy state.
fn closed_forms(ens: &TwirlEnsemble, rho: &DensityMatrix) -> Result<(f64, f64)> {
    let mut order = ens.cut.labels();
    order.extend(rho.layout().complement(&ens.cut.labels())?);
    let work = rho.reorder(&order)?;
    let d_rest = work.dim() / ens.cut.total_dim();
    let id_rest = CMat::identity(d_rest, d_rest);
    let (mut bar, mut tilde) = (0.0, 0.0);
    let mut ps = Vec::new();
    for b in &ens.blocks {
        let Some(s) = &b.spectrum else { continue };
        let e = kron(&b.embed, &id_rest);
        let y = e.adjoint() * work.data() * &e;
        let p = linalg::trace(&y).re;
        if p <= 1e-14 {
            continue;
        }
        ps.push(p);
        let inner = b.r_dim * d_rest;
        let mut qs = Vec::new();
        let mut mixed_part = 0.0;
        for proj in &s.projectors {
            let reduced = linalg::trace_first(&(kron(proj, &CMat::identity(inner, inner)) * &y), b.t_dim, inner);
            let w = linalg::trace(&reduced).re;
            if w <= 1e-14 {
                continue;
            }
            let q = w / p;
            let d_k = linalg::trace(proj).re.round();
            qs.push(q);
            mixed_part += q * (d_k.ln() + entropy_of_matrix(&reduced.unscale(w)));
            tilde += p * q * d_k.ln();
        }
        let h_q = shannon(&qs);
        bar += p * (h_q + mixed_part);
        let right = linalg::trace_first(&y, b.t_dim, inner).unscale(p);
        tilde += p * (h_q + entropy_of_matrix(&right));
    }
    let h_p = shannon(&ps);
    Ok((h_p + bar, h_p + tilde))
}

fn decompose_tilde(
    tilde: &DensityMatrix,
    a: &[String],
    b: &[String],
    c: &[String],
    seed: u64,
) -> Result<MarkovDecomposition> {
    match markov_decompose(tilde, a, b, c, seed) {
        Err(Error::NotMarkov { cmi, tol }) => {
            Err(Error::AssumptionViolated { quantity: "I(A:C|B) of the maximum-entropy state".into(), value: cmi, tol })
        }
        other => other,
    }
}

/// Twirl `ρ` along the structure of its maximum-entropy state and compare entropies.
pub fn rate_report(rho: &DensityMatrix, regions: &Regions, opts: &SolverOptions, seed: u64) -> Result<RateReport> {
    let [a, b, c] = regions.abc();
    let all: Vec<String> = a.iter().chain(&b).chain(&c).cloned().collect();
    let rho = rho.partial_trace(&all)?;
    let s_rho = von_neumann_entropy(&rho);
    let (tilde, twirls, method) = match regions {
        Regions::Ring(split) => {
            let ring = merge_ring(&rho, split, seed)?;
            // A^R B^L sits on the link X2 − X3 and C^R A^L on X6 − X1
            let first = link_twirl(&ring.chain, 1, RATE_REL_TOL)?;
            let second = link_twirl(&ring.chain, 5, RATE_REL_TOL)?;
            (ring.state, vec![first, second], "ring")
        }
        Regions::Annulus(split) => {
            let tilde = merge_annulus(&rho, split)?;
            let dec = decompose_tilde(&tilde, &a, &b, &c, seed)?;
            (tilde, vec![annulus_twirl(&dec, RATE_REL_TOL)?], "annulus")
        }
        Regions::Plain { .. } => {
            let set = MarginalConstraintSet::from_state(&rho, &vec![a.clone(), b.clone(), c.clone()], 2)?;
            let tilde = iterative_maxent(&set, opts)?.state;
            let dec = decompose_tilde(&tilde, &a, &b, &c, seed)?;
            (tilde, vec![annulus_twirl(&dec, RATE_REL_TOL)?], "plain")
        }
    };
    let mut bar = rho.clone();
    for t in &twirls {
        bar = t.average(&bar)?;
    }
    let s_bar = von_neumann_entropy(&bar);
    let s_tilde = von_neumann_entropy(&tilde);
    let (log_d, log_d_blocks) = twirls.iter().map(log_counts).fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let (s_bar_closed, s_tilde_closed) = if twirls.len() == 1 {
        let (x, y) = closed_forms(&twirls[0], &rho)?;
        (Some(x), Some(y))
    } else {
        (None, None)
    };
    Ok(RateReport {
        s_rho,
        s_bar,
        s_tilde,
        c3: s_tilde - s_rho,
        single_copy_rate: s_bar - s_rho,
        log_d,
        log_d_blocks,
        slack: s_tilde - s_bar,
        s_bar_closed,
        s_tilde_closed,
        n_bounds: copy_bounds(&twirls[0]),
        method: method.into(),
    })
}
