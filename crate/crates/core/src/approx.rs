//! Approximate merges for states that only nearly satisfy the annulus
//! assumptions, and the two-sided bracket on the smoothed irreducible
//! three-body correlation.
//!
//! The assumption bound `ε` is measured in bits, so `2^{-ε}` is a fidelity
//! bound. Entropies and `f(δ)` are in nats.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{conditional_mutual_information, mutual_information, trace_distance, von_neumann_entropy};
use crate::error::{Error, Result};
use crate::linalg::{self, kron, CMat};
use crate::maxent::AnnulusSplit;
use crate::state::DensityMatrix;

/// Slack allowed on every inequality of the bracket.
pub const BOUND_SLACK: f64 = 1e-9;
/// Assumption residuals below this are entropy round-off and count as zero.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// `η(x) = −x ln x`.
pub fn eta(x: f64) -> f64 {
    linalg::eta(x)
}

/// Marginal radius `6√(1 − 2^{−ε})` reached by the approximate merge.
pub fn delta_of_epsilon(epsilon_bits: f64) -> f64 {
    6.0 * (1.0 - (-epsilon_bits.max(0.0)).exp2()).max(0.0).sqrt()
}

/// `f(δ) = 2 (2δ ln(d_A d_B² d_C) + 3η(2δ) + 7√δ ln d_A)`.
pub fn f_delta(delta: f64, (da, db, dc): (usize, usize, usize)) -> f64 {
    let fannes = 2.0 * delta * (da as f64 * (db * db) as f64 * dc as f64).ln() + 3.0 * eta(2.0 * delta);
    2.0 * (fannes + recovery_cmi_bound(delta, da))
}

/// Bound on `I(A:C|B)` of a state recovered to within `δ`, converted to nats.
pub fn recovery_cmi_bound(delta: f64, da: usize) -> f64 {
    7.0 * delta.sqrt() * (da as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxParams {
    /// Largest assumption residual, in bits.
    pub epsilon: f64,
    pub delta: f64,
    pub dims: (usize, usize, usize),
    pub f_delta: f64,
}

impl ApproxParams {
    pub fn new(epsilon_bits: f64, dims: (usize, usize, usize)) -> Self {
        let delta = delta_of_epsilon(epsilon_bits);
        Self { epsilon: epsilon_bits, delta, dims, f_delta: f_delta(delta, dims) }
    }
}

/// `I(A:B2C)`, `I(A:B2|B1)` and `I(B1:C|B2)`, in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionResiduals {
    pub a_b2c: f64,
    pub a_b2_given_b1: f64,
    pub b1_c_given_b2: f64,
}

impl AssumptionResiduals {
    pub fn max(&self) -> f64 {
        self.a_b2c.max(self.a_b2_given_b1).max(self.b1_c_given_b2)
    }

    pub fn epsilon_bits(&self) -> f64 {
        self.max() / std::f64::consts::LN_2
    }
}

pub fn assumption_residuals(rho: &DensityMatrix, split: &AnnulusSplit) -> Result<AssumptionResiduals> {
    let floor = |x: f64| if x < RESIDUAL_FLOOR { 0.0 } else { x };
    let b2c: Vec<String> = split.b2.iter().chain(&split.c).cloned().collect();
    Ok(AssumptionResiduals {
        a_b2c: floor(mutual_information(rho, &split.a, &b2c)?),
        a_b2_given_b1: floor(conditional_mutual_information(rho, &split.a, &split.b1, &split.b2)?),
        b1_c_given_b2: floor(conditional_mutual_information(rho, &split.b1, &split.b2, &split.c)?),
    })
}

fn dims(rho: &DensityMatrix, split: &AnnulusSplit) -> Result<(usize, usize, usize)> {
    let l = rho.layout();
    Ok((l.dim_of(&split.a)?, l.dim_of(&split.b())?, l.dim_of(&split.c)?))
}

/// Trace distances of the `AB`, `BC` and `AC` marginals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalDistances {
    pub ab: f64,
    pub bc: f64,
    pub ac: f64,
}

impl MarginalDistances {
    pub fn max(&self) -> f64 {
        self.ab.max(self.bc).max(self.ac)
    }
}

fn marginal_distances(x: &DensityMatrix, y: &DensityMatrix, split: &AnnulusSplit) -> Result<MarginalDistances> {
    let gap = |p: &[String], q: &[String]| -> Result<f64> {
        let keep: Vec<String> = p.iter().chain(q).cloned().collect();
        let order: Vec<String> = x.labels().into_iter().filter(|l| keep.contains(l)).collect();
        trace_distance(&x.partial_trace(&order)?, &y.partial_trace(&order)?.reorder(&order)?)
    };
    let b = split.b();
    Ok(MarginalDistances { ab: gap(&split.a, &b)?, bc: gap(&b, &split.c)?, ac: gap(&split.a, &split.c)? })
}

/// Petz merge `(id_{A B1} ⊗ Λ_{B2→B2 C}) ρ_{A B1 B2}` and the largest
/// two-party marginal distance it reaches. Fails if that distance exceeds
/// `6√(1 − 2^{−ε})`.
pub fn approx_merge(rho: &DensityMatrix, split: &AnnulusSplit) -> Result<(DensityMatrix, f64)> {
    let params = ApproxParams::new(assumption_residuals(rho, split)?.epsilon_bits(), dims(rho, split)?);
    let merged = split.merge_unchecked(rho)?;
    let achieved = marginal_distances(&merged, rho, split)?.max();
    if achieved > params.delta + BOUND_SLACK {
        return Err(Error::AssumptionViolated {
            quantity: "marginal distance".into(),
            value: achieved,
            tol: params.delta,
        });
    }
    Ok((merged, achieved))
}

/// A quantity next to the bound the argument gives for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

impl Step {
    fn new(value: f64, bound: f64) -> Self {
        Self { value, bound, holds: value <= bound + BOUND_SLACK }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub residuals: AssumptionResiduals,
    pub params: ApproxParams,
    /// `‖ρ_{A B2 C} − ρ_A ⊗ ρ_{B2 C}‖` against `2√ε`.
    pub pinsker_step: Step,
    /// `‖ρ_{B1 B2 C} − ρ̃_{B1 B2 C}‖` against `2√(1 − 2^{−ε})`. The Petz map
    /// is not the universal recovery map, so this may fail.
    pub recovery_step: Step,
    pub marginals: MarginalDistances,
    /// Largest marginal distance against `δ`.
    pub delta_achieved: Step,
    /// `2δ ln(d_A d_B² d_C) + 3η(2δ)`.
    pub fannes_step: f64,
    /// `I_ρ̃(A:C|B)` against `7√δ ln d_A`; reported, never enforced.
    pub recovery_cmi: Step,
    /// `S(ρ̃) − S(ρ)`, a lower bound on the smoothed correlation.
    pub c_hat: f64,
    pub cmi: f64,
    /// `Ĉ − (I(A:C|B) − f/2)`.
    pub lower_margin: f64,
    /// `I(A:C|B) − (Ĉ − f)`.
    pub upper_margin: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.lower_holds && self.upper_holds
    }
}

/// Evaluate every term of the bracket `I − f/2 ≤ Ĉ ≤ I + f` for `ρ`.
pub fn bound_check(rho: &DensityMatrix, split: &AnnulusSplit) -> Result<BoundReport> {
    let residuals = assumption_residuals(rho, split)?;
    let params = ApproxParams::new(residuals.epsilon_bits(), dims(rho, split)?);
    let eps = params.epsilon;
    let merged = split.merge_unchecked(rho)?;

    let b2c: Vec<String> = split.b2.iter().chain(&split.c).cloned().collect();
    let rho_a = rho.partial_trace(&split.a)?;
    let rho_b2c = rho.partial_trace(&b2c)?;
    let mut order = rho_a.labels();
    order.extend(rho_b2c.labels());
    let joint = rho.partial_trace(&order)?.reorder(&order)?;
    let pinsker = trace_distance(&joint, &rho_a.tensor(&rho_b2c)?)?;

    let b1b2c: Vec<String> = split.b1.iter().chain(&b2c).cloned().collect();
    let keep: Vec<String> = rho.labels().into_iter().filter(|l| b1b2c.contains(l)).collect();
    let recovered = trace_distance(&merged.partial_trace(&keep)?.reorder(&keep)?, &rho.partial_trace(&keep)?)?;

    let marginals = marginal_distances(&merged, rho, split)?;
    let delta = params.delta;
    let c_hat = von_neumann_entropy(&merged) - von_neumann_entropy(rho);
    let cmi = conditional_mutual_information(rho, &split.a, &split.b(), &split.c)?;
    let f = params.f_delta;
    let lower_margin = c_hat - (cmi - 0.5 * f);
    let upper_margin = cmi - (c_hat - f);
    Ok(BoundReport {
        residuals,
        params,
        pinsker_step: Step::new(pinsker, 2.0 * eps.sqrt()),
        recovery_step: Step::new(recovered, 2.0 * (1.0 - (-eps).exp2()).max(0.0).sqrt()),
        marginals,
        delta_achieved: Step::new(marginals.max(), delta),
        fannes_step: 2.0 * delta * ((params.dims.0 * params.dims.1 * params.dims.1 * params.dims.2) as f64).ln()
            + 3.0 * eta(2.0 * delta),
        recovery_cmi: Step::new(
            conditional_mutual_information(&merged, &split.a, &split.b(), &split.c)?,
            recovery_cmi_bound(delta, params.dims.0),
        ),
        c_hat,
        cmi,
        lower_margin,
        upper_margin,
        lower_holds: lower_margin >= -BOUND_SLACK,
        upper_holds: upper_margin >= -BOUND_SLACK,
    })
}

/// Independent depolarizing channel of strength `p` on every site.
pub fn depolarize(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidState(format!("depolarizing strength {p} is outside [0, 1]")));
    }
    let labels = rho.labels();
    let mut cur = rho.clone();
    for l in &labels {
        let mut order: Vec<String> = labels.iter().filter(|x| *x != l).cloned().collect();
        order.push(l.clone());
        let work = cur.reorder(&order)?;
        let d = work.layout().dim_of(&[l])?;
        let rest = work.dim() / d;
        let mixed = kron(&linalg::trace_second(work.data(), rest, d), &CMat::identity(d, d).unscale(d as f64));
        let out = work.data().scale(1.0 - p) + mixed.scale(p);
        cur = DensityMatrix::new(work.layout().clone(), linalg::hermitize(&out))?.reorder(&labels)?;
    }
    Ok(cur)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p: f64,
    pub report: BoundReport,
}

/// `bound_check` on the depolarized state for each strength, in input order.
pub fn depolarizing_sweep(rho: &DensityMatrix, split: &AnnulusSplit, ps: &[f64]) -> Result<Vec<SweepPoint>> {
    ps.par_iter().map(|&p| Ok(SweepPoint { p, report: bound_check(&depolarize(rho, p)?, split)? })).collect()
}
