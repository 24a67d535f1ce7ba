//! Tensor-factor bookkeeping: labelled sites, index permutation and embedding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, CMat};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Site {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of labelled tensor factors. Site 0 is the most significant
/// digit of the row index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Site>", into = "Vec<Site>")]
pub struct FactorLayout {
    sites: Vec<Site>,
}

impl TryFrom<Vec<Site>> for FactorLayout {
    type Error = Error;
    fn try_from(sites: Vec<Site>) -> Result<Self> {
        FactorLayout::from_sites(sites)
    }
}

impl From<FactorLayout> for Vec<Site> {
    fn from(l: FactorLayout) -> Self {
        l.sites
    }
}

impl FactorLayout {
    pub fn new<S: AsRef<str>>(sites: &[(S, usize)]) -> Result<Self> {
        Self::from_sites(sites.iter().map(|(l, d)| Site { label: l.as_ref().to_string(), dim: *d }).collect())
    }

    pub fn from_sites(sites: Vec<Site>) -> Result<Self> {
        for (i, s) in sites.iter().enumerate() {
            if s.dim == 0 {
                return Err(Error::InvalidLayout(format!("site `{}` has dimension 0", s.label)));
            }
            if sites[..i].iter().any(|t| t.label == s.label) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
        }
        Ok(Self { sites })
    }

    /// `n` qubits labelled by the given names.
    pub fn qubits<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let sites: Vec<(&str, usize)> = labels.iter().map(|l| (l.as_ref(), 2)).collect();
        Self::new(&sites)
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.sites.iter().map(|s| s.label.clone()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.sites.iter().map(|s| s.dim).product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.sites.iter().position(|s| s.label == label).ok_or_else(|| Error::UnknownSubsystem(label.to_string()))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.sites.iter().any(|s| s.label == label)
    }

    pub fn dim_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<usize> {
        let mut d = 1;
        for l in labels {
            d *= self.sites[self.position(l.as_ref())?].dim;
        }
        Ok(d)
    }

    /// Positions of `labels` sorted into layout order, rejecting repeats.
    pub fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut pos = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.position(l.as_ref())?;
            if pos.contains(&p) {
                return Err(Error::DuplicateLabel(l.as_ref().to_string()));
            }
            pos.push(p);
        }
        pos.sort_unstable();
        Ok(pos)
    }

    pub fn select(&self, positions: &[usize]) -> FactorLayout {
        FactorLayout { sites: positions.iter().map(|&p| self.sites[p].clone()).collect() }
    }

    /// Sub-layout of the given labels, in layout order.
    pub fn restrict<S: AsRef<str>>(&self, labels: &[S]) -> Result<FactorLayout> {
        Ok(self.select(&self.positions(labels)?))
    }

    pub fn concat(&self, other: &FactorLayout) -> Result<FactorLayout> {
        let mut sites = self.sites.clone();
        sites.extend(other.sites.iter().cloned());
        Self::from_sites(sites)
    }

    /// Labels not in `labels`, in layout order.
    pub fn complement<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<String>> {
        let pos = self.positions(labels)?;
        Ok((0..self.len()).filter(|p| !pos.contains(p)).map(|p| self.sites[p].label.clone()).collect())
    }

    /// For every index of the permuted layout (`new[k] = old[perm[k]]`),
    /// the matching index in this layout.
    pub fn permutation_map(&self, perm: &[usize]) -> Vec<usize> {
        let dims = self.dims();
        let n = self.len();
        let mut old_stride = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            old_stride[k] = old_stride[k + 1] * dims[k + 1];
        }
        let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
        let total = self.total_dim();
        let mut map = Vec::with_capacity(total);
        let mut digits = vec![0usize; n];
        for _ in 0..total {
            map.push(digits.iter().zip(perm).map(|(&d, &p)| d * old_stride[p]).sum());
            for k in (0..n).rev() {
                digits[k] += 1;
                if digits[k] < new_dims[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
        map
    }

    /// Reorder the factors of an operator on this layout.
    pub fn permute(&self, m: &CMat, perm: &[usize]) -> (FactorLayout, CMat) {
        let map = self.permutation_map(perm);
        let n = map.len();
        let out = CMat::from_fn(n, n, |a, b| m[(map[a], map[b])]);
        (self.select(perm), out)
    }

    /// Permutation moving `positions` (in order) to the front.
    pub fn front_perm(&self, positions: &[usize]) -> Vec<usize> {
        let mut perm = positions.to_vec();
        perm.extend((0..self.len()).filter(|p| !positions.contains(p)));
        perm
    }

    /// Trace out everything but `keep`; the result is in layout order.
    pub fn partial_trace<S: AsRef<str>>(&self, m: &CMat, keep: &[S]) -> Result<(FactorLayout, CMat)> {
        let pos = self.positions(keep)?;
        let perm = self.front_perm(&pos);
        let (l, pm) = self.permute(m, &perm);
        let dk: usize = pos.iter().map(|&p| self.sites[p].dim).product();
        let dr = self.total_dim() / dk;
        let out = crate::linalg::trace_second(&pm, dk, dr);
        Ok((l.select(&(0..pos.len()).collect::<Vec<_>>()), out))
    }

    /// Embed an operator acting on `sub` (which must be a sub-layout in any
    /// order) as `op ⊗ I` on this layout.
    pub fn embed(&self, sub: &FactorLayout, op: &CMat) -> Result<CMat> {
        let mut order = Vec::with_capacity(self.len());
        for s in &sub.sites {
            let p = self.position(&s.label)?;
            if self.sites[p].dim != s.dim {
                return Err(Error::LayoutMismatch(format!("dimension of `{}` differs", s.label)));
            }
            order.push(p);
        }
        let rest: Vec<usize> = (0..self.len()).filter(|p| !order.contains(p)).collect();
        let drest: usize = rest.iter().map(|&p| self.sites[p].dim).product();
        let big = kron(op, &CMat::identity(drest, drest));
        let mut work_order = order.clone();
        work_order.extend(&rest);
        let work = self.select(&work_order);
        // inverse permutation: position of each original site inside `work`
        let mut inv = vec![0usize; self.len()];
        for (k, &p) in work_order.iter().enumerate() {
            inv[p] = k;
        }
        Ok(work.permute(&big, &inv).1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs};

    #[test]
    fn rejects_duplicates_and_zero_dims() {
        assert!(matches!(FactorLayout::new(&[("a", 2), ("a", 2)]), Err(Error::DuplicateLabel(_))));
        assert!(matches!(FactorLayout::new(&[("a", 0)]), Err(Error::InvalidLayout(_))));
    }

    #[test]
    fn swap_permutation() {
        let l = FactorLayout::new(&[("a", 2), ("b", 3)]).unwrap();
        let m = CMat::from_fn(6, 6, |i, j| c((i * 6 + j) as f64));
        let (l2, p) = l.permute(&m, &[1, 0]);
        assert_eq!(l2.labels(), vec!["b", "a"]);
        // |b=1,a=0> maps to old |a=0,b=1> = index 1
        assert_eq!(p[(2, 2)], m[(1, 1)]);
        let (_, back) = l2.permute(&p, &[1, 0]);
        assert!(max_abs(&(back - m)) == 0.0);
    }

    #[test]
    fn embed_matches_kron_order() {
        let l = FactorLayout::new(&[("a", 2), ("b", 2), ("c", 2)]).unwrap();
        let sub = FactorLayout::new(&[("c", 2)]).unwrap();
        let z = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0)]));
        let e = l.embed(&sub, &z).unwrap();
        let expect = kron(&CMat::identity(4, 4), &z);
        assert!(max_abs(&(e - expect)) == 0.0);
    }
}
