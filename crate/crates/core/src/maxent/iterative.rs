//! Iterative information projection onto a set of marginal constraints.
//!
//! The iterate is kept as a Gibbs state `exp(H)/Z` with `H = Σ_S H_S ⊗ 1`.
//! Each step moves every local term by `λ (log τ_S − log ρ_S)`, which is the
//! multiplicative update `log ρ ← log ρ + λ Σ_S (log τ_S − log ρ_S)`. A step
//! is kept only if it lowers the dual `log Z − Σ_S Tr τ_S H_S`; otherwise the
//! damping is halved.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::constraints::MarginalConstraintSet;
use crate::entropy::{trace_distance, von_neumann_entropy};
use crate::error::{Error, Result};
use crate::layout::FactorLayout;
use crate::linalg::{eigh, hermitize, log_eps, random_hermitian, CMat};
use crate::state::DensityMatrix;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Stop once every marginal is within this trace distance of its target.
    pub tol: f64,
    pub max_iter: usize,
    /// Floor for logarithms of rank-deficient targets.
    pub eps: f64,
    /// Initial (and maximal) damping.
    pub step: f64,
    /// Start from random local terms instead of the maximally mixed state.
    pub seed: Option<u64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 20_000, eps: 1e-13, step: 0.5, seed: None }
    }
}

#[derive(Debug, Clone)]
pub struct MaxEntSolution {
    pub state: DensityMatrix,
    pub entropy: f64,
    pub iterations: usize,
    /// Largest marginal trace distance at the returned iterate.
    pub residual: f64,
    pub converged: bool,
}

struct Eval {
    rho: CMat,
    dual: f64,
    residual: f64,
    steps: Vec<CMat>,
}

struct Problem<'a> {
    set: &'a MarginalConstraintSet,
    subs: Vec<FactorLayout>,
    log_targets: Vec<CMat>,
    eps: f64,
}

impl Problem<'_> {
    fn hamiltonian(&self, base: &CMat, terms: &[CMat]) -> Result<CMat> {
        let mut h = base.clone();
        for (sub, t) in self.subs.iter().zip(terms) {
            h += self.set.layout.embed(sub, t)?;
        }
        Ok(hermitize(&h))
    }

    fn evaluate(&self, base: &CMat, terms: &[CMat]) -> Result<Eval> {
        let h = self.hamiltonian(base, terms)?;
        let e = eigh(&h);
        let top = e.max();
        let z: f64 = e.values.iter().map(|v| (v - top).exp()).sum();
        let log_z = top + z.ln();
        let rho = e.map(|v| (v - top).exp() / z);
        let mut dual = log_z;
        let mut residual: f64 = 0.0;
        let mut steps = Vec::with_capacity(terms.len());
        for ((target, sub), (t, log_t)) in
            self.set.targets.iter().zip(&self.subs).zip(terms.iter().zip(&self.log_targets))
        {
            dual -= (target.state.data() * t).trace().re;
            let (_, marg) = self.set.layout.partial_trace(&rho, &sub.labels())?;
            let marg = hermitize(&marg);
            residual = residual.max(crate::linalg::trace_norm_herm(&(&marg - target.state.data())));
            steps.push(log_t - log_eps(&marg, self.eps));
        }
        Ok(Eval { rho, dual, residual, steps })
    }
}

/// Run the solver and return the best iterate whether or not it converged.
pub fn solve(set: &MarginalConstraintSet, opts: &SolverOptions) -> Result<MaxEntSolution> {
    let d = set.layout.total_dim();
    // Targets are stored in layout order of their own sites; `embed` and the
    // layout's partial trace both use the global order, so align them.
    let mut subs = Vec::with_capacity(set.targets.len());
    let mut log_targets = Vec::with_capacity(set.targets.len());
    let mut aligned = set.clone();
    for t in aligned.targets.iter_mut() {
        let sub = set.layout.restrict(&t.labels())?;
        t.state = t.state.reorder(&sub.labels())?;
        log_targets.push(log_eps(t.state.data(), opts.eps));
        subs.push(sub);
    }
    let problem = Problem { set: &aligned, subs, log_targets, eps: opts.eps };

    let base = CMat::zeros(d, d);
    let mut rng = opts.seed.map(ChaCha8Rng::seed_from_u64);
    let mut terms: Vec<CMat> = problem
        .subs
        .iter()
        .map(|s| match rng.as_mut() {
            Some(r) => random_hermitian(r, s.total_dim()),
            None => CMat::zeros(s.total_dim(), s.total_dim()),
        })
        .collect();
    let mut cur = problem.evaluate(&base, &terms)?;
    let mut step = opts.step;
    let mut iterations = 0;
    while cur.residual >= opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let trial: Vec<CMat> = terms.iter().zip(&cur.steps).map(|(t, s)| t + s.scale(step)).collect();
        let next = problem.evaluate(&base, &trial)?;
        let slack = 1e-13 * cur.dual.abs().max(1.0);
        if next.dual <= cur.dual + slack {
            terms = trial;
            cur = next;
            step = (step * 1.25).min(opts.step);
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    let state = DensityMatrix::normalized(set.layout.clone(), cur.rho)?;
    log::debug!("maxent: {iterations} iterations, residual {:.3e}", cur.residual);
    Ok(MaxEntSolution {
        entropy: von_neumann_entropy(&state),
        state,
        iterations,
        residual: cur.residual,
        converged: cur.residual < opts.tol,
    })
}

/// Maximum-entropy state consistent with the constraints.
pub fn iterative_maxent(set: &MarginalConstraintSet, opts: &SolverOptions) -> Result<MaxEntSolution> {
    let sol = solve(set, opts)?;
    if !sol.converged {
        return Err(Error::ConvergenceFailure { iterations: sol.iterations, residual: sol.residual });
    }
    Ok(sol)
}

/// Trace distance between the solutions reached from several random starts.
pub fn uniqueness_spread(set: &MarginalConstraintSet, opts: &SolverOptions, seeds: &[u64]) -> Result<f64> {
    let sols = seeds
        .iter()
        .map(|&s| iterative_maxent(set, &SolverOptions { seed: Some(s), ..*opts }).map(|x| x.state))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for (i, a) in sols.iter().enumerate() {
        for b in &sols[i + 1..] {
            worst = worst.max(trace_distance(a, b)?);
        }
    }
    Ok(worst)
}
