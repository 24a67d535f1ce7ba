//! Distances to Gibbs families, irreducible correlations and the
//! tripartite correlation report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::constraints::{MarginalConstraintSet, Parties};
use super::iterative::{iterative_maxent, SolverOptions};
use super::merge::{merge_annulus, merge_ring, AnnulusSplit, Residual, RingSplit, ASSUMPTION_TOL};
use crate::entropy::{entropy_of, mutual_information, von_neumann_entropy};
use crate::error::{Error, Result};
use crate::state::DensityMatrix;

/// Negative correlations above this are solver noise and clamp to zero.
pub const NEGATIVE_FLOOR: f64 = -1e-6;

fn clamp(name: &str, v: f64) -> f64 {
    if (NEGATIVE_FLOOR..0.0).contains(&v) {
        if v < -1e-12 {
            log::warn!("{name} = {v:.3e} clamped to zero");
        }
        0.0
    } else {
        v
    }
}

/// `S(ρ̃^(k)) − S(ρ)`, with `D^(0) = ln d − S(ρ)` and `D^(n) = 0`.
pub fn distance_dk(rho: &DensityMatrix, parties: &Parties, k: usize, opts: &SolverOptions) -> Result<f64> {
    let n = parties.len();
    if k > n {
        return Err(Error::InvalidLayout(format!("order {k} exceeds the {n} parties")));
    }
    let s = von_neumann_entropy(rho);
    let d = match k {
        0 => (rho.dim() as f64).ln() - s,
        _ if k == n => {
            MarginalConstraintSet::from_state(rho, parties, k)?;
            0.0
        }
        1 => {
            let mut sum = 0.0;
            for p in MarginalConstraintSet::from_state(rho, parties, 1)?.targets {
                sum += von_neumann_entropy(&p.state);
            }
            sum - s
        }
        _ => {
            let set = MarginalConstraintSet::from_state(rho, parties, k)?;
            iterative_maxent(&set, opts)?.entropy - s
        }
    };
    Ok(clamp("D", d))
}

/// `C^(k) = D^(k−1) − D^(k)` for `1 ≤ k ≤ n`.
pub fn irreducible_correlation(rho: &DensityMatrix, parties: &Parties, k: usize, opts: &SolverOptions) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidLayout("irreducible correlations start at order 1".into()));
    }
    let hi = distance_dk(rho, parties, k - 1, opts)?;
    let lo = distance_dk(rho, parties, k, opts)?;
    Ok(clamp("C", hi - lo))
}

/// `D^(0) … D^(n)` and `C^(1) … C^(n)` from one pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationProfile {
    pub distances: Vec<f64>,
    pub irreducible: Vec<f64>,
}

impl CorrelationProfile {
    /// `Σ_{k≥2} C^(k)`, which equals the total correlation.
    pub fn multipartite(&self) -> f64 {
        self.irreducible.iter().skip(1).sum()
    }
}

pub fn correlation_profile(rho: &DensityMatrix, parties: &Parties, opts: &SolverOptions) -> Result<CorrelationProfile> {
    let distances = (0..=parties.len()).map(|k| distance_dk(rho, parties, k, opts)).collect::<Result<Vec<_>>>()?;
    let irreducible = distances.windows(2).map(|w| clamp("C", w[0] - w[1])).collect();
    Ok(CorrelationProfile { distances, irreducible })
}

/// How the tripartition is cut for the closed-form merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Regions {
    /// No split; the iterative solver is used.
    Plain {
        a: Vec<String>,
        b: Vec<String>,
        c: Vec<String>,
    },
    Annulus(AnnulusSplit),
    Ring(RingSplit),
}

impl Regions {
    pub fn abc(&self) -> [Vec<String>; 3] {
        match self {
            Regions::Plain { a, b, c } => [a.clone(), b.clone(), c.clone()],
            Regions::Annulus(s) => [s.a.clone(), s.b(), s.c.clone()],
            Regions::Ring(s) => [s.a(), s.b(), s.c()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Entropies of `A`, `B`, `C`, `AB`, `BC`, `CA`, `ABC`.
    pub entropies: BTreeMap<String, f64>,
    pub gamma: f64,
    pub c3: f64,
    /// `D^(1) − D^(2)`.
    pub c2: f64,
    pub ct: f64,
    /// `I(A:B) + I(B:C) + I(C:A)`; equals `c2` whenever `c3 = gamma`.
    pub mutual_information_sum: f64,
    /// `D^(1)`, `D^(2)`, `D^(3)`.
    pub d_k: Vec<f64>,
    /// `|gamma − c3|`.
    pub verdict: f64,
    pub method: String,
    pub assumptions: Vec<Residual>,
    pub assumption_violated: bool,
}

pub const CSV_HEADER: &str = "name,gamma,c3,c2,ct,verdict,method,assumption_violated,max_assumption_residual";

impl CorrelationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn csv_row(&self, name: &str) -> String {
        let worst = self.assumptions.iter().map(|r| r.value).fold(0.0, f64::max);
        format!(
            "{name},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{:.6e}",
            self.gamma, self.c3, self.c2, self.ct, self.verdict, self.method, self.assumption_violated, worst
        )
    }
}

/// Entropy gap of the maximum-entropy state over the two-party marginals.
/// Uses a closed-form merge when its assumptions hold and falls back to the
/// iterative solver otherwise.
pub fn tee_dense(rho: &DensityMatrix, regions: &Regions, opts: &SolverOptions, seed: u64) -> Result<CorrelationReport> {
    let [a, b, c] = regions.abc();
    let all: Vec<String> = a.iter().chain(&b).chain(&c).cloned().collect();
    let rho = rho.partial_trace(&all)?;
    let parties: Parties = vec![a.clone(), b.clone(), c.clone()];
    crate::entropy::check_partition(&rho, &parties)?;

    let mut entropies = BTreeMap::new();
    let join = |x: &[String], y: &[String]| -> Vec<String> { x.iter().chain(y).cloned().collect() };
    for (name, set) in [
        ("A", a.clone()),
        ("B", b.clone()),
        ("C", c.clone()),
        ("AB", join(&a, &b)),
        ("BC", join(&b, &c)),
        ("CA", join(&c, &a)),
        ("ABC", all.clone()),
    ] {
        entropies.insert(name.to_string(), entropy_of(&rho, &set)?);
    }
    let e = |k: &str| entropies[k];
    let gamma = e("AB") + e("BC") + e("CA") - e("A") - e("B") - e("C") - e("ABC");
    let ct = e("A") + e("B") + e("C") - e("ABC");
    let mi_sum =
        mutual_information(&rho, &a, &b)? + mutual_information(&rho, &b, &c)? + mutual_information(&rho, &c, &a)?;

    let (merged, method, assumptions) = match regions {
        Regions::Plain { .. } => {
            let r = Residual { name: "I(A:C)".into(), value: mutual_information(&rho, &a, &c)?, tol: ASSUMPTION_TOL };
            (None, "iterative", vec![r])
        }
        Regions::Annulus(s) => {
            let res = s.residuals(&rho)?;
            match merge_annulus(&rho, s) {
                Ok(m) => (Some(m), "annulus-merge", res),
                Err(Error::AssumptionViolated { .. }) => (None, "iterative", res),
                Err(e) => return Err(e),
            }
        }
        Regions::Ring(s) => {
            let res = s.residuals(&rho)?;
            match merge_ring(&rho, s, seed) {
                Ok(m) => (Some(m.state), "ring-merge", res),
                Err(Error::AssumptionViolated { .. }) => (None, "iterative", res),
                Err(e) => return Err(e),
            }
        }
    };
    let s_tilde = match merged {
        Some(m) => von_neumann_entropy(&m),
        None => iterative_maxent(&MarginalConstraintSet::from_state(&rho, &parties, 2)?, opts)?.entropy,
    };
    let d2 = clamp("D", s_tilde - e("ABC"));
    let d1 = ct;
    let c3 = d2;
    let assumption_violated = assumptions.iter().any(|r| !r.holds());
    Ok(CorrelationReport {
        gamma,
        c3,
        c2: clamp("C", d1 - d2),
        ct,
        mutual_information_sum: mi_sum,
        d_k: vec![d1, d2, 0.0],
        verdict: (gamma - c3).abs(),
        method: method.into(),
        assumptions,
        assumption_violated,
        entropies,
    })
}
