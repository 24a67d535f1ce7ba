//! Chains of Markov-decomposed sites `X_0 − X_1 − ⋯`, open or closed into a
//! ring, reassembled as `⊕ Π_k p(j_{k+1}|j_k) ⊗_k ρ_{X_k^R X_{k+1}^L}`.

use crate::error::{Error, Result};
use crate::layout::FactorLayout;
use crate::linalg::{self, kron, CMat};
use crate::state::DensityMatrix;

use super::decompose::MarkovDecomposition;

/// Block weights below this are treated as absent.
const WEIGHT_FLOOR: f64 = 1e-14;

/// Isometry `L ⊗ R → X` for one block of a site.
#[derive(Debug, Clone)]
pub struct SiteBlock {
    pub iso: CMat,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone)]
pub struct ChainSite {
    pub layout: FactorLayout,
    pub blocks: Vec<SiteBlock>,
}

impl ChainSite {
    /// Single block with everything in the right factor (start of an open chain).
    pub fn head(layout: FactorLayout) -> Self {
        let d = layout.total_dim();
        Self { layout, blocks: vec![SiteBlock { iso: CMat::identity(d, d), left: 1, right: d }] }
    }

    /// Single block with everything in the left factor (end of an open chain).
    pub fn tail(layout: FactorLayout) -> Self {
        let d = layout.total_dim();
        Self { layout, blocks: vec![SiteBlock { iso: CMat::identity(d, d), left: d, right: 1 }] }
    }

    /// Site given by the middle system of a decomposition.
    pub fn from_decomposition(dec: &MarkovDecomposition) -> Self {
        Self {
            layout: dec.b.clone(),
            blocks: dec
                .blocks
                .iter()
                .map(|b| SiteBlock { iso: b.iso.clone(), left: b.left_dim(), right: b.right_dim() })
                .collect(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.layout.labels()
    }
}

/// Block pair `(from, to)` of the link between site `k` and site `k+1`.
#[derive(Debug, Clone)]
pub struct PairBlock {
    pub from: usize,
    pub to: usize,
    /// `Tr(Π_from Π_to ρ)`.
    pub weight: f64,
    /// Normalized state on `R_from ⊗ L_to`.
    pub state: CMat,
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub sites: Vec<ChainSite>,
    pub cyclic: bool,
    /// `marginals[k][j] = Tr(Π_j ρ)` for block `j` of site `k`.
    pub marginals: Vec<Vec<f64>>,
    /// `links[k]` couples site `k` to site `k+1` (mod the length when cyclic).
    pub links: Vec<Vec<PairBlock>>,
    /// Site order of the assembled state.
    pub order: Vec<String>,
}

impl ChainState {
    pub fn build(rho: &DensityMatrix, sites: Vec<ChainSite>, cyclic: bool) -> Result<Self> {
        let m = sites.len();
        if m < 2 || (cyclic && m < 3) {
            return Err(Error::InvalidLayout("chain is too short".into()));
        }
        if !cyclic {
            let (first, last) = (&sites[0], &sites[m - 1]);
            if first.blocks.len() != 1
                || first.blocks[0].left != 1
                || last.blocks.len() != 1
                || last.blocks[0].right != 1
            {
                return Err(Error::DecompositionFailed("open chain ends must be single blocks".into()));
            }
        }
        let labels: Vec<String> = sites.iter().flat_map(|s| s.labels()).collect();
        let order: Vec<String> = rho.labels().into_iter().filter(|l| labels.contains(l)).collect();
        if order.len() != labels.len() {
            return Err(Error::UnknownSubsystem(
                labels.iter().find(|l| !order.contains(l)).cloned().unwrap_or_default(),
            ));
        }
        let mut marginals = Vec::with_capacity(m);
        for s in &sites {
            let r = rho.partial_trace(&s.labels())?.reorder(&s.labels())?;
            marginals.push(s.blocks.iter().map(|b| (b.iso.adjoint() * r.data() * &b.iso).trace().re).collect());
        }
        let n_links = if cyclic { m } else { m - 1 };
        let mut links = Vec::with_capacity(n_links);
        for k in 0..n_links {
            let (s, t) = (&sites[k], &sites[(k + 1) % m]);
            let mut pair_labels = s.labels();
            pair_labels.extend(t.labels());
            let pair = rho.partial_trace(&pair_labels)?.reorder(&pair_labels)?;
            let mut blocks = Vec::new();
            for (a, ba) in s.blocks.iter().enumerate() {
                for (b, bb) in t.blocks.iter().enumerate() {
                    let w = kron(&ba.iso, &bb.iso);
                    let compressed = w.adjoint() * pair.data() * &w;
                    let weight = linalg::trace(&compressed).re;
                    if weight <= WEIGHT_FLOOR {
                        continue;
                    }
                    let four =
                        FactorLayout::new(&[("l", ba.left), ("r", ba.right), ("l2", bb.left), ("r2", bb.right)])?;
                    let (_, mid) = four.partial_trace(&compressed, &["r", "l2"])?;
                    blocks.push(PairBlock { from: a, to: b, weight, state: linalg::hermitize(&mid.unscale(weight)) });
                }
            }
            links.push(blocks);
        }
        Ok(Self { sites, cyclic, marginals, links, order })
    }

    /// Open chain `A − B1 − B2 − C` from decompositions of `B1` (in `A B1 B2`)
    /// and of `B2` (in `B1 B2 C`).
    pub fn refine(rho: &DensityMatrix, first: &MarkovDecomposition, second: &MarkovDecomposition) -> Result<Self> {
        if first.c.labels() != second.b.labels() || second.a.labels() != first.b.labels() {
            return Err(Error::DecompositionFailed("decompositions do not share the middle systems".into()));
        }
        let sites = vec![
            ChainSite::head(first.a.clone()),
            ChainSite::from_decomposition(first),
            ChainSite::from_decomposition(second),
            ChainSite::tail(second.c.clone()),
        ];
        Self::build(rho, sites, false)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// `p(j_{k+1} = to | j_k = from)` along link `k`.
    pub fn conditional(&self, k: usize, from: usize, to: usize) -> f64 {
        let w = self.links[k].iter().find(|p| p.from == from && p.to == to).map_or(0.0, |p| p.weight);
        let base = self.marginals[k][from];
        if base <= WEIGHT_FLOOR {
            0.0
        } else {
            w / base
        }
    }

    /// Matrix `q[from][to]` of conditional weights along link `k`.
    pub fn conditional_matrix(&self, k: usize) -> Vec<Vec<f64>> {
        let m = self.sites.len();
        let (na, nb) = (self.sites[k].blocks.len(), self.sites[(k + 1) % m].blocks.len());
        (0..na).map(|a| (0..nb).map(|b| self.conditional(k, a, b)).collect()).collect()
    }

    /// Every block assignment with nonzero weight.
    pub fn configurations(&self) -> Vec<(Vec<usize>, f64)> {
        let m = self.sites.len();
        let counts: Vec<usize> = self.sites.iter().map(|s| s.blocks.len()).collect();
        let total: usize = counts.iter().product();
        let mut out = Vec::new();
        let mut idx = vec![0usize; m];
        for _ in 0..total {
            let mut w = if self.cyclic { 1.0 } else { self.marginals[0][idx[0]] };
            for k in 0..self.links.len() {
                if w == 0.0 {
                    break;
                }
                w *= self.conditional(k, idx[k], idx[(k + 1) % m]);
            }
            if w > WEIGHT_FLOOR {
                out.push((idx.clone(), w));
            }
            for k in (0..m).rev() {
                idx[k] += 1;
                if idx[k] < counts[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }

    pub fn total_weight(&self) -> f64 {
        self.configurations().iter().map(|(_, w)| w).sum()
    }

    fn link_state(&self, k: usize, from: usize, to: usize) -> Option<&CMat> {
        self.links[k].iter().find(|p| p.from == from && p.to == to).map(|p| &p.state)
    }

    /// The reassembled state, normalized, in the site order of the source.
    pub fn assemble(&self) -> Result<DensityMatrix> {
        let m = self.sites.len();
        let layout =
            self.sites.iter().skip(1).try_fold(self.sites[0].layout.clone(), |acc, s| acc.concat(&s.layout))?;
        let n = layout.total_dim();
        let mut acc = CMat::zeros(n, n);
        for (idx, w) in self.configurations() {
            let mut inner = CMat::identity(1, 1);
            let mut dims = Vec::with_capacity(2 * m);
            for k in 0..self.links.len() {
                let next = (k + 1) % m;
                let st = self.link_state(k, idx[k], idx[next]).expect("weighted link has a state");
                inner = kron(&inner, st);
                dims.push(self.sites[k].blocks[idx[k]].right);
                dims.push(self.sites[next].blocks[idx[next]].left);
            }
            if self.cyclic {
                // factors read R0 L1 R1 … R_{m-1} L0; rotate L0 to the front
                let sites: Vec<(String, usize)> = dims.iter().enumerate().map(|(i, &d)| (format!("f{i}"), d)).collect();
                let lay = FactorLayout::new(&sites)?;
                let mut perm = vec![2 * m - 1];
                perm.extend(0..2 * m - 1);
                inner = lay.permute(&inner, &perm).1;
            }
            let emb = self.sites.iter().zip(&idx).fold(CMat::identity(1, 1), |e, (s, &j)| kron(&e, &s.blocks[j].iso));
            acc += (&emb * inner * emb.adjoint()).scale(w);
        }
        DensityMatrix::normalized(layout, acc)?.reorder(&self.order)
    }

    /// One term per link: `⊕_{a,b} 1_{L} ⊗ log_ε[p(b|a) ρ_{R_a L_b}] ⊗ 1_{R}`
    /// on the two sites, with `log ε` on uncovered subspaces. Returns the
    /// site labels of each term and the matrix in that label order.
    pub fn link_terms(&self, eps: f64) -> Result<Vec<(FactorLayout, CMat)>> {
        let m = self.sites.len();
        let mut out = Vec::with_capacity(self.links.len());
        for k in 0..self.links.len() {
            let (s, t) = (&self.sites[k], &self.sites[(k + 1) % m]);
            let layout = s.layout.concat(&t.layout)?;
            let d = layout.total_dim();
            let mut term = CMat::zeros(d, d);
            let mut covered = CMat::zeros(d, d);
            for (a, ba) in s.blocks.iter().enumerate() {
                for (b, bb) in t.blocks.iter().enumerate() {
                    let w = kron(&ba.iso, &bb.iso);
                    let dm = ba.right * bb.left;
                    let log_mid = match self.link_state(k, a, b) {
                        Some(st) => linalg::log_eps(&st.scale(self.conditional(k, a, b)), eps),
                        None => CMat::identity(dm, dm).scale(eps.ln()),
                    };
                    let local =
                        kron(&kron(&CMat::identity(ba.left, ba.left), &log_mid), &CMat::identity(bb.right, bb.right));
                    term += &w * local * w.adjoint();
                    covered += &w * w.adjoint();
                }
            }
            term += (CMat::identity(d, d) - covered).scale(eps.ln());
            out.push((layout, linalg::hermitize(&term)));
        }
        Ok(out)
    }
}
