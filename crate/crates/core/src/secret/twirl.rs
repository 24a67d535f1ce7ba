//! Eigenspace twirls: random unitaries `⊕_{i,K} s_K W_K ⊗ 1_{R_i}` with `W_K`
//! a Weyl–Heisenberg operator on the eigenspace `K` of the state on `T_i`
//! and `s_K = ±1` an independent sign per eigenspace.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::layout::FactorLayout;
use crate::linalg::{self, c, kron, CMat, C64};
use crate::markov::{ChainState, MarkovDecomposition};
use crate::spectral::{spectral, Spectrum};
use crate::state::DensityMatrix;

/// Adjacent eigenvalue groups closer than this multiple of the grouping
/// tolerance are reported as ambiguous.
pub const AMBIGUITY_FACTOR: f64 = 100.0;

/// One direct summand `E (T ⊗ R)` of the twirled space.
#[derive(Debug, Clone)]
pub struct TwirlBlock {
    /// Isometry `T ⊗ R → cut`.
    pub embed: CMat,
    pub t_dim: usize,
    pub r_dim: usize,
    /// Eigenspaces of the state on `T`; `None` leaves the block untouched.
    pub spectrum: Option<Spectrum>,
    /// Weight of the block in the state that defined it.
    pub weight: f64,
    /// Tensor factors of `T` in the computational basis, if known.
    pub t_factors: Vec<usize>,
}

impl TwirlBlock {
    pub fn new(embed: CMat, t_state: Option<&CMat>, r_dim: usize, weight: f64, rel_tol: f64) -> Result<Self> {
        let t_dim = embed.ncols() / r_dim;
        let spectrum = match t_state {
            Some(s) => Some(grouped_spectrum(s, rel_tol)?),
            None => None,
        };
        Ok(Self { embed, t_dim, r_dim, spectrum, weight, t_factors: vec![t_dim] })
    }

    /// Record the tensor factors of `T`. An eigenspace covering all of `T`
    /// is then drawn from products of per-factor Weyl operators.
    pub fn with_factors(mut self, factors: Vec<usize>) -> Result<Self> {
        if factors.iter().product::<usize>() != self.t_dim {
            return Err(Error::LayoutMismatch("factors do not multiply to the block dimension".into()));
        }
        self.t_factors = factors;
        Ok(self)
    }

    /// Nonzero eigenvalues, largest first.
    pub fn nonzero_eigenvalues(&self) -> Vec<(f64, usize)> {
        match &self.spectrum {
            Some(s) => {
                let cut = s.eigenvalues.first().copied().unwrap_or(0.0) * linalg::EIG_CUTOFF;
                s.eigenvalues.iter().zip(&s.degeneracies).filter(|(v, _)| **v > cut).map(|(v, d)| (*v, *d)).collect()
            }
            None => Vec::new(),
        }
    }
}

/// Spectrum with a guard against eigenvalues that sit just outside the
/// grouping tolerance.
pub fn grouped_spectrum(m: &CMat, rel_tol: f64) -> Result<Spectrum> {
    let s = spectral(m, rel_tol);
    let scale = s.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for w in s.eigenvalues.windows(2) {
        if (w[0] - w[1]).abs() < AMBIGUITY_FACTOR * rel_tol * scale {
            return Err(Error::DegeneracyAmbiguous(w[0], w[1]));
        }
    }
    Ok(s)
}

/// Uniform ensemble over independent per-eigenspace draws.
#[derive(Debug, Clone)]
pub struct TwirlEnsemble {
    /// Sites acted on, in the order used by `embed`.
    pub cut: FactorLayout,
    pub blocks: Vec<TwirlBlock>,
}

/// Generalized Pauli `X^a Z^b` on `d` levels.
pub fn weyl(d: usize, a: usize, b: usize) -> CMat {
    let omega = 2.0 * std::f64::consts::PI / d as f64;
    let mut m = CMat::zeros(d, d);
    for j in 0..d {
        m[((j + a) % d, j)] = C64::from_polar(1.0, omega * (b * j % d) as f64);
    }
    m
}

impl TwirlEnsemble {
    pub fn new(cut: FactorLayout, blocks: Vec<TwirlBlock>) -> Result<Self> {
        let d = cut.total_dim();
        let mut cover = CMat::zeros(d, d);
        for b in &blocks {
            if b.embed.nrows() != d || b.t_dim * b.r_dim != b.embed.ncols() {
                return Err(Error::LayoutMismatch("twirl block does not fit the cut".into()));
            }
            cover += &b.embed * b.embed.adjoint();
        }
        let defect = linalg::max_abs(&(cover - CMat::identity(d, d)));
        if defect > 1e-8 {
            return Err(Error::DecompositionFailed(format!("twirl blocks do not tile the cut (defect {defect:.2e})")));
        }
        Ok(Self { cut, blocks })
    }

    /// Number of independent eigenspace draws.
    pub fn eigenspace_count(&self) -> usize {
        self.blocks.iter().map(|b| b.spectrum.as_ref().map_or(0, |s| s.distinct_count)).sum()
    }

    /// One member of the ensemble.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> CMat {
        let d = self.cut.total_dim();
        let mut u = CMat::zeros(d, d);
        for b in &self.blocks {
            let local = match &b.spectrum {
                Some(s) => {
                    let mut acc = CMat::zeros(b.t_dim, b.t_dim);
                    for basis in &s.bases {
                        let k = basis.ncols();
                        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                        if k == b.t_dim && b.t_factors.len() > 1 {
                            let w = b.t_factors.iter().fold(CMat::identity(1, 1), |w, &f| {
                                kron(&w, &weyl(f, rng.gen_range(0..f), rng.gen_range(0..f)))
                            });
                            acc += w.scale(sign);
                        } else {
                            let w = weyl(k, rng.gen_range(0..k), rng.gen_range(0..k));
                            acc += (basis * w * basis.adjoint()).scale(sign);
                        }
                    }
                    acc
                }
                None => CMat::identity(b.t_dim, b.t_dim),
            };
            u += &b.embed * kron(&local, &CMat::identity(b.r_dim, b.r_dim)) * b.embed.adjoint();
        }
        u
    }

    /// Exact average of `U X U†` for an operator on the cut: within each block
    /// and eigenspace, `Π X Π ↦ Tr(Π X) Π / d`; everything else vanishes.
    pub fn pinch(&self, x: &CMat) -> CMat {
        self.average_matrix(x, 1)
    }

    fn average_matrix(&self, x: &CMat, d_rest: usize) -> CMat {
        let n = x.nrows();
        let mut out = CMat::zeros(n, n);
        let id_rest = CMat::identity(d_rest, d_rest);
        for b in &self.blocks {
            let e = kron(&b.embed, &id_rest);
            let y = e.adjoint() * x * &e;
            let inner_dim = b.r_dim * d_rest;
            let avg = match &b.spectrum {
                Some(s) => {
                    let mut acc = CMat::zeros(y.nrows(), y.ncols());
                    for p in &s.projectors {
                        let k = linalg::trace(p).re.round().max(1.0);
                        let big = kron(p, &CMat::identity(inner_dim, inner_dim));
                        let reduced = linalg::trace_first(&(&big * &y), b.t_dim, inner_dim);
                        acc += kron(&p.unscale(k), &reduced);
                    }
                    acc
                }
                None => y,
            };
            out += &e * avg * e.adjoint();
        }
        out
    }

    fn split(&self, rho: &DensityMatrix) -> Result<(DensityMatrix, usize)> {
        let mut order = self.cut.labels();
        order.extend(rho.layout().complement(&self.cut.labels())?);
        let work = rho.reorder(&order)?;
        let cut_here = work.layout().restrict(&self.cut.labels())?;
        if cut_here != self.cut {
            return Err(Error::LayoutMismatch("cut dimensions differ from the state".into()));
        }
        let d_rest = work.dim() / self.cut.total_dim();
        Ok((work, d_rest))
    }

    /// `U ρ U†` with `U` acting on the cut.
    pub fn conjugate(&self, rho: &DensityMatrix, u: &CMat) -> Result<DensityMatrix> {
        let (work, d_rest) = self.split(rho)?;
        let big = kron(u, &CMat::identity(d_rest, d_rest));
        DensityMatrix::normalized(work.layout().clone(), &big * work.data() * big.adjoint())?.reorder(&rho.labels())
    }

    /// Average of `U ρ U†` over the whole ensemble.
    pub fn average(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let (work, d_rest) = self.split(rho)?;
        let avg = self.average_matrix(work.data(), d_rest);
        DensityMatrix::normalized(work.layout().clone(), avg)?.reorder(&rho.labels())
    }

    /// Trace distance between the exact average and the mean of `draws`
    /// sampled members, each drawn from its own stream of `seed`.
    pub fn monte_carlo_gap(&self, rho: &DensityMatrix, draws: usize, seed: u64) -> Result<f64> {
        use rand::SeedableRng;
        let (work, d_rest) = self.split(rho)?;
        let n = work.dim();
        let id = CMat::identity(d_rest, d_rest);
        let sum = (0..draws)
            .into_par_iter()
            .map(|k| {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                let big = kron(&self.draw(&mut rng), &id);
                &big * work.data() * big.adjoint()
            })
            .reduce(|| CMat::zeros(n, n), |a, b| a + b);
        let sampled = sum.unscale(draws as f64);
        let exact = self.average_matrix(work.data(), d_rest);
        Ok(linalg::trace_norm_herm(&linalg::hermitize(&(sampled - exact))))
    }
}

/// Twirl of `A B^L` from a decomposition along `B`.
pub fn annulus_twirl(dec: &MarkovDecomposition, rel_tol: f64) -> Result<TwirlEnsemble> {
    let cut = dec.a.concat(&dec.b)?;
    let da = dec.a.total_dim();
    let blocks = dec
        .blocks
        .iter()
        .map(|b| {
            let embed = kron(&CMat::identity(da, da), &b.iso);
            let mut factors: Vec<usize> = dec.a.sites().iter().map(|s| s.dim).collect();
            factors.push(b.left_dim());
            TwirlBlock::new(embed, Some(b.left_state.data()), b.right_dim(), b.prob, rel_tol)?.with_factors(factors)
        })
        .collect::<Result<Vec<_>>>()?;
    TwirlEnsemble::new(cut, blocks)
}

/// Twirl of the link `X_k^R X_{k+1}^L` of a chain.
pub fn link_twirl(chain: &ChainState, k: usize, rel_tol: f64) -> Result<TwirlEnsemble> {
    let m = chain.sites.len();
    let (s, t) = (&chain.sites[k], &chain.sites[(k + 1) % m]);
    let cut = s.layout.concat(&t.layout)?;
    let mut blocks = Vec::new();
    for (a, ba) in s.blocks.iter().enumerate() {
        for (b, bb) in t.blocks.iter().enumerate() {
            // columns of kron(iso_a, iso_b) read L_a R_a L_b R_b; reorder to (R_a L_b)(L_a R_b)
            let four = FactorLayout::new(&[("la", ba.left), ("ra", ba.right), ("lb", bb.left), ("rb", bb.right)])?;
            let map = four.permutation_map(&[1, 2, 0, 3]);
            let n = map.len();
            let mut perm = CMat::zeros(n, n);
            for (new, &old) in map.iter().enumerate() {
                perm[(old, new)] = c(1.0);
            }
            let embed = kron(&ba.iso, &bb.iso) * perm;
            let pair = chain.links[k].iter().find(|p| p.from == a && p.to == b);
            let weight = pair.map_or(0.0, |p| p.weight);
            let block = TwirlBlock::new(embed, pair.map(|p| &p.state), ba.left * bb.right, weight, rel_tol)?;
            blocks.push(block.with_factors(vec![ba.right, bb.left])?);
        }
    }
    TwirlEnsemble::new(cut, blocks)
}
