use crate::entropy::trace_distance;
use crate::error::{Error, Result};
use crate::layout::FactorLayout;
use crate::state::DensityMatrix;

/// Marginals must agree on overlaps within this trace distance.
pub const COMPAT_TOL: f64 = 1e-9;

/// Groups of sites treated as single parties.
pub type Parties = Vec<Vec<String>>;

/// A prescribed marginal on the union of some parties.
#[derive(Debug, Clone)]
pub struct Target {
    pub parties: Vec<usize>,
    pub state: DensityMatrix,
}

impl Target {
    pub fn labels(&self) -> Vec<String> {
        self.state.labels()
    }
}

/// The set of states whose marginals on every `k`-subset of parties match the targets.
#[derive(Debug, Clone)]
pub struct MarginalConstraintSet {
    pub layout: FactorLayout,
    pub parties: Parties,
    pub k: usize,
    pub targets: Vec<Target>,
}

/// All `k`-element subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn check_parties(layout: &FactorLayout, parties: &Parties) -> Result<()> {
    let mut seen: Vec<&str> = Vec::new();
    for p in parties {
        if p.is_empty() {
            return Err(Error::InvalidLayout("empty party".into()));
        }
        for l in p {
            layout.position(l)?;
            if seen.contains(&l.as_str()) {
                return Err(Error::OverlappingRegions(l.clone()));
            }
            seen.push(l);
        }
    }
    if seen.len() != layout.len() {
        return Err(Error::InvalidLayout("parties do not cover every site".into()));
    }
    Ok(())
}

impl MarginalConstraintSet {
    /// The `k`-party marginals of `rho`.
    pub fn from_state(rho: &DensityMatrix, parties: &Parties, k: usize) -> Result<Self> {
        check_parties(rho.layout(), parties)?;
        if k == 0 || k > parties.len() {
            return Err(Error::InvalidLayout(format!("order {k} is outside 1..={}", parties.len())));
        }
        let targets = subsets(parties.len(), k)
            .into_iter()
            .map(|ps| {
                let labels: Vec<&String> = ps.iter().flat_map(|&p| parties[p].iter()).collect();
                Ok(Target { state: rho.partial_trace(&labels)?, parties: ps })
            })
            .collect::<Result<_>>()?;
        Ok(Self { layout: rho.layout().clone(), parties: parties.clone(), k, targets })
    }

    /// Explicit targets; each must cover exactly the sites of its parties.
    pub fn new(layout: FactorLayout, parties: Parties, k: usize, targets: Vec<Target>) -> Result<Self> {
        check_parties(&layout, &parties)?;
        for t in &targets {
            let mut want: Vec<String> = t.parties.iter().flat_map(|&p| parties[p].iter().cloned()).collect();
            let mut have = t.labels();
            want.sort();
            have.sort();
            if want != have {
                return Err(Error::LayoutMismatch("target sites differ from its parties".into()));
            }
            for s in t.state.layout().sites() {
                if layout.sites()[layout.position(&s.label)?].dim != s.dim {
                    return Err(Error::LayoutMismatch(format!("dimension of `{}` differs", s.label)));
                }
            }
        }
        let set = Self { layout, parties, k, targets };
        set.check_compatible()?;
        Ok(set)
    }

    /// Overlapping targets must share their common marginal.
    pub fn check_compatible(&self) -> Result<()> {
        for (i, s) in self.targets.iter().enumerate() {
            for t in &self.targets[i + 1..] {
                let common: Vec<String> = s.labels().into_iter().filter(|l| t.labels().contains(l)).collect();
                if common.is_empty() {
                    continue;
                }
                let distance = trace_distance(&s.state.partial_trace(&common)?, &t.state.partial_trace(&common)?)?;
                if distance > COMPAT_TOL {
                    return Err(Error::InconsistentMarginal { distance });
                }
            }
        }
        Ok(())
    }

    /// Largest trace distance between a candidate's marginals and the targets.
    pub fn residual(&self, sigma: &DensityMatrix) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for t in &self.targets {
            let m = sigma.partial_trace(&t.labels())?.reorder(&t.labels())?;
            worst = worst.max(trace_distance(&m, &t.state)?);
        }
        Ok(worst)
    }
}
