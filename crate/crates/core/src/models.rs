//! Builtin states used by tests, examples and the CLI.

use rand::Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::layout::FactorLayout;
use crate::linalg::{self, c, kron, CMat};
use crate::state::DensityMatrix;

pub fn ghz<S: AsRef<str>>(labels: &[S]) -> Result<DensityMatrix> {
    let layout = FactorLayout::qubits(labels)?;
    let n = layout.total_dim();
    let mut psi = vec![c(0.0); n];
    psi[0] = c(1.0);
    psi[n - 1] = c(1.0);
    DensityMatrix::pure(layout, &psi)
}

pub fn w_state<S: AsRef<str>>(labels: &[S]) -> Result<DensityMatrix> {
    let layout = FactorLayout::qubits(labels)?;
    let k = labels.len();
    let mut psi = vec![c(0.0); layout.total_dim()];
    for q in 0..k {
        psi[1 << q] = c(1.0);
    }
    DensityMatrix::pure(layout, &psi)
}

pub fn bell(a: &str, b: &str) -> Result<DensityMatrix> {
    ghz(&[a, b])
}

/// Random state of the given rank, with Ginibre statistics.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, layout: FactorLayout, rank: usize) -> Result<DensityMatrix> {
    let d = layout.total_dim();
    DensityMatrix::new(layout, linalg::random_density(rng, d, rank.clamp(1, d)))
}

/// Random probability vector of length `n` (flat Dirichlet).
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let exp = rand_distr::Exp1;
    let w: Vec<f64> = (0..n).map(|_| exp.sample(rng)).collect::<Vec<f64>>();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// `(σ^{1/2} ⊗ 1) J (σ^{1/2} ⊗ 1)` for the Choi matrix `J` of a random channel
/// from a `dim(σ)`-level system to `dout` levels, so the first marginal is `σ`.
pub fn channel_state<R: Rng + ?Sized>(rng: &mut R, sigma: &CMat, dout: usize, kraus: usize) -> CMat {
    let din = sigma.nrows();
    let v = linalg::random_isometry(rng, dout * kraus, din);
    let mut j = CMat::zeros(din * dout, din * dout);
    for m in 0..kraus {
        let k = v.rows(m * dout, dout).into_owned();
        let psi = CMat::from_fn(din * dout, 1, |r, _| k[(r % dout, r / dout)]);
        j += &psi * psi.adjoint();
    }
    let s = kron(&linalg::psd_sqrt(sigma), &CMat::identity(dout, dout));
    linalg::hermitize(&(&s * j * &s))
}

/// Isometries embedding `L_i ⊗ R_i` as consecutive blocks of `⊕_i L_i ⊗ R_i`,
/// rotated by `rotation` when given.
pub fn direct_sum_isometries(dims: &[(usize, usize)], rotation: Option<&CMat>) -> Vec<CMat> {
    let total: usize = dims.iter().map(|(l, r)| l * r).sum();
    let mut offset = 0;
    dims.iter()
        .map(|(l, r)| {
            let w = l * r;
            let iso = CMat::from_fn(total, w, |i, j| c(if i == offset + j { 1.0 } else { 0.0 }));
            offset += w;
            match rotation {
                Some(u) => u * iso,
                None => iso,
            }
        })
        .collect()
}

/// Random Markov state `⊕_i p_i ρ_{A L_i} ⊗ ρ_{R_i C}` on sites `A`, `B`, `C`,
/// with `B` optionally rotated by a random unitary.
pub fn random_markov_state<R: Rng + ?Sized>(
    rng: &mut R,
    da: usize,
    dc: usize,
    blocks: &[(usize, usize)],
    rotate: bool,
) -> Result<DensityMatrix> {
    if blocks.is_empty() {
        return Err(Error::InvalidLayout("need at least one block".into()));
    }
    let db: usize = blocks.iter().map(|(l, r)| l * r).sum();
    let u = rotate.then(|| linalg::random_unitary(rng, db));
    let isos = direct_sum_isometries(blocks, u.as_ref());
    let probs = random_simplex(rng, blocks.len());
    let n = da * db * dc;
    let mut acc = CMat::zeros(n, n);
    for ((&(dl, dr), iso), p) in blocks.iter().zip(&isos).zip(&probs) {
        let left = linalg::random_density(rng, da * dl, da * dl);
        let right = linalg::random_density(rng, dr * dc, dr * dc);
        let emb = kron(&kron(&CMat::identity(da, da), iso), &CMat::identity(dc, dc));
        acc += (&emb * kron(&left, &right) * emb.adjoint()).scale(*p);
    }
    let layout = FactorLayout::new(&[("A", da), ("B", db), ("C", dc)])?;
    DensityMatrix::normalized(layout, acc)
}

/// Shape of a random four-site Markov chain `A - B1 - B2 - C`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainShape {
    pub a: usize,
    pub c: usize,
    pub b1_blocks: Vec<(usize, usize)>,
    pub b2_blocks: Vec<(usize, usize)>,
}

impl Default for ChainShape {
    fn default() -> Self {
        Self { a: 2, c: 2, b1_blocks: vec![(1, 2), (2, 1)], b2_blocks: vec![(2, 1), (1, 2)] }
    }
}

/// Random state `Σ_ij p_i q_{j|i} ρ_{A L_i} ⊗ ρ_{R_i L'_j} ⊗ ρ_{R'_j C}` on
/// sites `A`, `B1`, `B2`, `C`. The outer blocks come from random channels
/// applied to fixed marginals, so `ρ_AC = ρ_A ⊗ ρ_C` and every conditional
/// mutual information along the chain vanishes. All blocks have full rank.
pub fn random_chain_qms<R: Rng + ?Sized>(rng: &mut R, shape: &ChainShape) -> Result<DensityMatrix> {
    let (da, dc) = (shape.a, shape.c);
    if da == 0 || dc == 0 || shape.b1_blocks.is_empty() || shape.b2_blocks.is_empty() {
        return Err(Error::InvalidLayout("chain shape has an empty factor".into()));
    }
    let d1: usize = shape.b1_blocks.iter().map(|(l, r)| l * r).sum();
    let d2: usize = shape.b2_blocks.iter().map(|(l, r)| l * r).sum();
    let u1 = linalg::random_unitary(rng, d1);
    let u2 = linalg::random_unitary(rng, d2);
    let iso1 = direct_sum_isometries(&shape.b1_blocks, Some(&u1));
    let iso2 = direct_sum_isometries(&shape.b2_blocks, Some(&u2));
    let sigma_a = linalg::random_density(rng, da, da);
    let sigma_c = linalg::random_density(rng, dc, dc);
    let left: Vec<CMat> = shape.b1_blocks.iter().map(|&(dl, _)| channel_state(rng, &sigma_a, dl, da * dl)).collect();
    let right: Vec<CMat> = shape
        .b2_blocks
        .iter()
        .map(|&(_, dr)| {
            // built as C ⊗ R, then swapped to R ⊗ C
            let cr = channel_state(rng, &sigma_c, dr, dc * dr);
            let l = FactorLayout::new(&[("c", dc), ("r", dr)]).unwrap();
            l.permute(&cr, &[1, 0]).1
        })
        .collect();
    let p = random_simplex(rng, shape.b1_blocks.len());
    let n = da * d1 * d2 * dc;
    let mut acc = CMat::zeros(n, n);
    for (i, &(_, r1)) in shape.b1_blocks.iter().enumerate() {
        let q = random_simplex(rng, shape.b2_blocks.len());
        for (j, &(l2, _)) in shape.b2_blocks.iter().enumerate() {
            let mid = linalg::random_density(rng, r1 * l2, r1 * l2);
            let inner = kron(&kron(&left[i], &mid), &right[j]);
            let emb = kron(&kron(&kron(&CMat::identity(da, da), &iso1[i]), &iso2[j]), &CMat::identity(dc, dc));
            acc += (&emb * inner * emb.adjoint()).scale(p[i] * q[j]);
        }
    }
    let layout = FactorLayout::new(&[("A", da), ("B1", d1), ("B2", d2), ("C", dc)])?;
    DensityMatrix::normalized(layout, acc)
}

/// Product of single-site states.
pub fn product(states: &[DensityMatrix]) -> Result<DensityMatrix> {
    let mut it = states.iter();
    let first = it.next().ok_or_else(|| Error::InvalidLayout("empty product".into()))?.clone();
    it.try_fold(first, |acc, s| acc.tensor(s))
}
