use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::toric::ToricCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    /// Three sectors of a disk meeting at a point.
    #[serde(rename = "KP-disk")]
    KpDisk,
    /// Three arcs of an annulus.
    #[serde(rename = "KP-annulus")]
    KpAnnulus,
    /// Annulus with `A` and `C` separated by a two-piece `B`.
    #[serde(rename = "LW-annulus")]
    LwAnnulus,
    /// Pairwise non-adjacent regions.
    #[serde(rename = "separated")]
    Separated,
}

/// Named qubit subsets of a toric-code lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionMask {
    pub geometry: Geometry,
    pub lattice: ToricCode,
    pub regions: BTreeMap<String, Vec<usize>>,
    /// Finer pieces used by chain constructions: `B1`, `B2` for the
    /// LW annulus, `X1`..`X6` (in ring order) for the KP annulus.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub splits: BTreeMap<String, Vec<usize>>,
}

impl RegionMask {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: RegionMask = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn region(&self, name: &str) -> Result<&[usize]> {
        self.regions
            .get(name)
            .or_else(|| self.splits.get(name))
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidMask(format!("no region `{name}`")))
    }

    pub fn a(&self) -> &[usize] {
        &self.regions["A"]
    }

    pub fn b(&self) -> &[usize] {
        &self.regions["B"]
    }

    pub fn c(&self) -> &[usize] {
        &self.regions["C"]
    }

    /// Every qubit of `A`, `B` and `C`, sorted.
    pub fn support(&self) -> Vec<usize> {
        let mut all: Vec<usize> = ["A", "B", "C"].iter().flat_map(|k| self.regions[*k].iter().copied()).collect();
        all.sort_unstable();
        all
    }

    pub fn translate(&self, dx: isize, dy: isize) -> RegionMask {
        let shift = |m: &BTreeMap<String, Vec<usize>>| {
            m.iter().map(|(k, v)| (k.clone(), v.iter().map(|&q| self.lattice.translate(q, dx, dy)).collect())).collect()
        };
        RegionMask {
            geometry: self.geometry,
            lattice: self.lattice,
            regions: shift(&self.regions),
            splits: shift(&self.splits),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ToricCode::new(self.lattice.lx, self.lattice.ly)?;
        let n = self.lattice.n_qubits();
        for key in ["A", "B", "C"] {
            let r = self.regions.get(key).ok_or_else(|| Error::InvalidMask(format!("missing region `{key}`")))?;
            if r.is_empty() {
                return Err(Error::InvalidMask(format!("region `{key}` is empty")));
            }
        }
        if let Some(k) = self.regions.keys().find(|k| !["A", "B", "C"].contains(&k.as_str())) {
            return Err(Error::InvalidMask(format!("unexpected region `{k}`")));
        }
        let mut owner = vec![None; n];
        for (name, qs) in &self.regions {
            for &q in qs {
                if q >= n {
                    return Err(Error::InvalidMask(format!("qubit {q} out of range in `{name}`")));
                }
                if owner[q].is_some() {
                    return Err(Error::OverlappingRegions(format!("qubit {q}")));
                }
                owner[q] = Some(name.clone());
            }
        }
        let connected = |qs: &[usize]| self.components(qs) == 1;
        let (a, b, c) = (self.a(), self.b(), self.c());
        let all = self.support();
        match self.geometry {
            Geometry::KpDisk | Geometry::KpAnnulus => {
                for (k, r) in [("A", a), ("B", b), ("C", c)] {
                    if !connected(r) {
                        return Err(Error::InvalidMask(format!("region `{k}` is not connected")));
                    }
                }
                if !connected(&all) {
                    return Err(Error::InvalidMask("union of regions is not connected".into()));
                }
            }
            Geometry::LwAnnulus => {
                if !connected(a) || !connected(c) || !connected(&all) {
                    return Err(Error::InvalidMask("LW annulus needs connected A, C and union".into()));
                }
                if self.components(b) != 2 {
                    return Err(Error::InvalidMask("LW annulus needs B in two pieces".into()));
                }
            }
            Geometry::Separated => {
                for (x, y) in [(a, b), (b, c), (a, c)] {
                    if self.touching(x, y) {
                        return Err(Error::InvalidMask("separated regions touch".into()));
                    }
                }
            }
        }
        self.validate_splits()
    }

    fn validate_splits(&self) -> Result<()> {
        let same = |parts: &[&str], whole: &[usize]| -> Result<bool> {
            let mut u = Vec::new();
            for p in parts {
                u.extend_from_slice(
                    self.splits.get(*p).ok_or_else(|| Error::InvalidMask(format!("missing split `{p}`")))?,
                );
            }
            let mut w = whole.to_vec();
            u.sort_unstable();
            w.sort_unstable();
            Ok(u == w)
        };
        if self.splits.is_empty() {
            return Ok(());
        }
        let ok = match self.geometry {
            Geometry::LwAnnulus => same(&["B1", "B2"], self.b())?,
            Geometry::KpAnnulus => {
                same(&["X1", "X2"], self.a())? && same(&["X3", "X4"], self.b())? && same(&["X5", "X6"], self.c())?
            }
            _ => return Err(Error::InvalidMask("splits are only defined for annuli".into())),
        };
        if !ok {
            return Err(Error::InvalidMask("splits do not partition their regions".into()));
        }
        Ok(())
    }

    fn touching(&self, x: &[usize], y: &[usize]) -> bool {
        x.iter().any(|&p| y.iter().any(|&q| self.adjacent(p, q)))
    }

    fn adjacent(&self, p: usize, q: usize) -> bool {
        let a = self.lattice.endpoints(p);
        let b = self.lattice.endpoints(q);
        a.iter().any(|v| b.contains(v))
    }

    /// Number of connected pieces, edges being adjacent when they share a vertex.
    fn components(&self, qs: &[usize]) -> usize {
        let mut seen = vec![false; qs.len()];
        let mut count = 0;
        for s in 0..qs.len() {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut stack = vec![s];
            while let Some(i) = stack.pop() {
                for j in 0..qs.len() {
                    if !seen[j] && self.adjacent(qs[i], qs[j]) {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        count
    }
}
