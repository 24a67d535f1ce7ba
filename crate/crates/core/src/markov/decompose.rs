use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::{conditional_mutual_information, entropy_of, trace_distance};
use crate::error::{Error, Result};
use crate::layout::FactorLayout;
use crate::linalg::{self, eigh, kron, CMat, C64};
use crate::state::DensityMatrix;

/// Default CMI tolerance below which a state counts as Markov.
pub const QMS_TOL: f64 = 1e-7;
/// Reconstruction must match the source within this trace distance.
pub const RECONSTRUCT_TOL: f64 = 1e-7;
/// Eigenvalues of the symmetrized recovery composite above `1 − FIXED_GAP` are fixed points.
const FIXED_GAP: f64 = 1e-6;
/// Relative tolerance when grouping eigenvalues of a random algebra element.
const GROUP_TOL: f64 = 1e-7;

/// Labels of the two tensor factors inside each block of `B`.
pub const LEFT: &str = "#left";
pub const RIGHT: &str = "#right";

/// Outcome of a Markov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmsCheck {
    pub is_qms: bool,
    pub cmi: f64,
    /// `S(AB) + S(BC) − S(B) − S(ABC)` recomputed from the saturation identity.
    pub saturation_gap: f64,
}

pub fn is_qms<S: AsRef<str>>(rho: &DensityMatrix, a: &[S], b: &[S], c: &[S], tol: f64) -> Result<QmsCheck> {
    let cmi = conditional_mutual_information(rho, a, b, c)?;
    let ab: Vec<&str> = a.iter().chain(b).map(|s| s.as_ref()).collect();
    let bc: Vec<&str> = b.iter().chain(c).map(|s| s.as_ref()).collect();
    let abc: Vec<&str> = a.iter().chain(b).chain(c).map(|s| s.as_ref()).collect();
    let gap = entropy_of(rho, &abc)? - (entropy_of(rho, &ab)? + entropy_of(rho, &bc)? - entropy_of(rho, b)?);
    Ok(QmsCheck { is_qms: cmi <= tol && gap.abs() <= tol, cmi, saturation_gap: gap })
}

/// One summand `p · W (ρ_{A L} ⊗ ρ_{R C}) W†` of a Markov decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovBlock {
    pub prob: f64,
    /// Isometry `L ⊗ R → B`, columns indexed `l·dim(R) + r`.
    pub iso: CMat,
    /// State on the sites of `A` followed by [`LEFT`].
    pub left_state: DensityMatrix,
    /// State on [`RIGHT`] followed by the sites of `C`.
    pub right_state: DensityMatrix,
}

impl MarkovBlock {
    pub fn left_dim(&self) -> usize {
        self.left_state.layout().sites().last().map_or(1, |s| s.dim)
    }

    pub fn right_dim(&self) -> usize {
        self.right_state.layout().sites()[0].dim
    }

    pub fn projector(&self) -> CMat {
        &self.iso * self.iso.adjoint()
    }
}

/// `ρ_ABC = ⊕_i p_i ρ_{A B_i^L} ⊗ ρ_{B_i^R C}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovDecomposition {
    pub a: FactorLayout,
    pub b: FactorLayout,
    pub c: FactorLayout,
    /// Site order of the decomposed state.
    pub order: Vec<String>,
    pub blocks: Vec<MarkovBlock>,
}

impl MarkovDecomposition {
    pub fn block_dims(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().map(|b| (b.left_dim(), b.right_dim())).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.prob).collect()
    }

    /// Reassemble the state in its original site order.
    pub fn reconstruct(&self) -> Result<DensityMatrix> {
        let (da, db, dc) = (self.a.total_dim(), self.b.total_dim(), self.c.total_dim());
        let n = da * db * dc;
        let mut acc = CMat::zeros(n, n);
        for blk in &self.blocks {
            let emb = kron(&kron(&CMat::identity(da, da), &blk.iso), &CMat::identity(dc, dc));
            let inner = kron(blk.left_state.data(), blk.right_state.data());
            acc += (&emb * inner * emb.adjoint()).scale(blk.prob);
        }
        let layout = self.a.concat(&self.b)?.concat(&self.c)?;
        DensityMatrix::normalized(layout, acc)?.reorder(&self.order)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&DecompositionJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: DecompositionJson = serde_json::from_str(text)?;
        j.try_into()
    }
}

/// Decompose `ρ_ABC` along `B`, seeding the random algebra elements from `seed`.
pub fn markov_decompose<S: AsRef<str>>(
    rho: &DensityMatrix,
    a: &[S],
    b: &[S],
    c: &[S],
    seed: u64,
) -> Result<MarkovDecomposition> {
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return Err(Error::InvalidLayout("all three regions must be nonempty".into()));
    }
    let check = is_qms(rho, a, b, c, QMS_TOL)?;
    if !check.is_qms {
        return Err(Error::NotMarkov { cmi: check.cmi, tol: QMS_TOL });
    }
    let own = |s: &[S]| -> Vec<String> { s.iter().map(|x| x.as_ref().to_string()).collect() };
    let (a, b, c) = (own(a), own(b), own(c));
    let mut order = a.clone();
    order.extend(b.iter().cloned());
    order.extend(c.iter().cloned());
    let abc = rho.partial_trace(&order)?.reorder(&order)?;
    let bc_labels: Vec<String> = b.iter().chain(&c).cloned().collect();
    let ab_labels: Vec<String> = a.iter().chain(&b).cloned().collect();
    let rho_bc = abc.partial_trace(&bc_labels)?.reorder(&bc_labels)?;
    let rho_ab = abc.partial_trace(&ab_labels)?.reorder(&ab_labels)?;
    let rho_b = abc.partial_trace(&b)?.reorder(&b)?;

    let first = block_structure(&rho_bc, &rho_b, seed)?;
    let second = block_structure(&rho_bc, &rho_b, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let dims = |s: &[CMatBlock]| {
        let mut d: Vec<(usize, usize)> = s.iter().map(|x| (x.left, x.right)).collect();
        d.sort_unstable();
        d
    };
    if dims(&first) != dims(&second) {
        return Err(Error::DecompositionFailed("block dimensions depend on the random seed".into()));
    }

    // `abc` follows `order`, so each restriction keeps the caller's site order
    let (la, lb, lc) = (abc.layout().restrict(&a)?, abc.layout().restrict(&b)?, abc.layout().restrict(&c)?);
    let (da, dc) = (la.total_dim(), lc.total_dim());
    let mut blocks = Vec::with_capacity(first.len());
    for blk in first {
        let (dl, dr) = (blk.left, blk.right);
        let proj = &blk.iso * blk.iso.adjoint();
        let prob = (rho_b.data() * &proj).trace().re;
        if prob <= linalg::EIG_CUTOFF {
            continue;
        }
        let wa = kron(&CMat::identity(da, da), &blk.iso);
        let ab_block = wa.adjoint() * rho_ab.data() * &wa;
        let left = linalg::trace_second(&ab_block, da * dl, dr);
        let wc = kron(&blk.iso, &CMat::identity(dc, dc));
        let bc_block = wc.adjoint() * rho_bc.data() * &wc;
        let right = linalg::trace_first(&bc_block, dl, dr * dc);
        let left_layout = la.concat(&FactorLayout::new(&[(LEFT, dl)])?)?;
        let right_layout = FactorLayout::new(&[(RIGHT, dr)])?.concat(&lc)?;
        blocks.push(MarkovBlock {
            prob,
            iso: blk.iso,
            left_state: DensityMatrix::normalized(left_layout, left)?,
            right_state: DensityMatrix::normalized(right_layout, right)?,
        });
    }
    let total: f64 = blocks.iter().map(|b| b.prob).sum();
    for blk in &mut blocks {
        blk.prob /= total;
    }
    let dec = MarkovDecomposition { a: la, b: lb, c: lc, order: order.clone(), blocks };
    let distance = trace_distance(&dec.reconstruct()?, &abc)?;
    if distance > RECONSTRUCT_TOL {
        return Err(Error::DecompositionFailed(format!("reconstruction is off by {distance:.3e}")));
    }
    Ok(MarkovDecomposition { order: rho.labels().into_iter().filter(|l| order.contains(l)).collect(), ..dec })
}

struct CMatBlock {
    iso: CMat,
    left: usize,
    right: usize,
}

/// Blocks `⊕ M(n_k) ⊗ 1_{m_k}` of the algebra fixed by the dual of
/// `Tr_C ∘ Petz`, returned as isometries `C^{n_k} ⊗ C^{m_k} → B`.
fn block_structure(rho_bc: &DensityMatrix, rho_b: &DensityMatrix, seed: u64) -> Result<Vec<CMatBlock>> {
    let db = rho_b.dim();
    let dc = rho_bc.dim() / db;
    let eb = eigh(rho_b.data());
    let support = eb.support();
    let r = support.ncols();
    let vals: Vec<f64> = eb.values[..r].to_vec();

    let vc = kron(&support, &CMat::identity(dc, dc));
    let sqrt_bc = vc.adjoint() * linalg::psd_sqrt(rho_bc.data()) * &vc;
    let quarter =
        |p: f64| CMat::from_diagonal(&nalgebra::DVector::from_iterator(r, vals.iter().map(|v| linalg::c(v.powf(p)))));
    let qm = quarter(-0.25);

    // superoperator Σ conj(K) ⊗ K of x ↦ Σ K x K†
    let mut sup = CMat::zeros(r * r, r * r);
    for cc in 0..dc {
        for cp in 0..dc {
            let m = CMat::from_fn(r, r, |i, j| sqrt_bc[(i * dc + cc, j * dc + cp)]);
            let k = &qm * m * &qm;
            sup += kron(&k.map(|z| z.conj()), &k);
        }
    }
    let es = eigh(&sup);
    let fixed = es.values.iter().take_while(|&&v| v > 1.0 - FIXED_GAP).count();
    if fixed == 0 {
        return Err(Error::DecompositionFailed("no fixed points found".into()));
    }
    // Hermitian spanning set of the fixed algebra, in support coordinates
    let mut herm = Vec::with_capacity(2 * fixed);
    for j in 0..fixed {
        let x = CMat::from_column_slice(r, r, es.vectors.column(j).as_slice());
        let y = &qm * x * &qm;
        let h1 = linalg::hermitize(&y);
        let h2 = linalg::hermitize(&(y * C64::new(0.0, -1.0)));
        for h in [h1, h2] {
            if linalg::frobenius(&h) > 1e-8 {
                herm.push(h.unscale(linalg::frobenius(&h)));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_element = |rng: &mut ChaCha8Rng| {
        use rand_distr::{Distribution, StandardNormal};
        let mut g = CMat::zeros(r, r);
        for h in &herm {
            let w: f64 = StandardNormal.sample(rng);
            g += h.scale(w);
        }
        g
    };
    let g = random_element(&mut rng);
    let eg = eigh(&g);
    let scale = eg.values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let mut spaces: Vec<CMat> = Vec::new();
    let mut start = 0;
    for k in 1..=r {
        if k == r || (eg.values[start] - eg.values[k]).abs() > GROUP_TOL * scale {
            spaces.push(eg.vectors.columns(start, k - start).into_owned());
            start = k;
        }
    }

    // eigenspaces linked by some algebra element belong to the same block
    let t = spaces.len();
    let mut parent: Vec<usize> = (0..t).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..t {
        for j in i + 1..t {
            let linked = herm.iter().any(|h| linalg::max_abs(&(spaces[i].adjoint() * h * &spaces[j])) > 1e-6);
            if linked {
                let (x, y) = (find(&mut parent, i), find(&mut parent, j));
                parent[x] = y;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; t];
    for i in 0..t {
        let root = find(&mut parent, i);
        match root_of[root] {
            Some(g) => groups[g].push(i),
            None => {
                root_of[root] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }

    let mut dim_sum = 0;
    let h = random_element(&mut rng);
    let mut blocks = Vec::with_capacity(groups.len());
    for grp in &groups {
        let n = grp.len();
        let m = spaces[grp[0]].ncols();
        if grp.iter().any(|&i| spaces[i].ncols() != m) {
            return Err(Error::DecompositionFailed("eigenspaces within a block differ in size".into()));
        }
        dim_sum += n * n;
        let q1 = &spaces[grp[0]];
        let mut cols = Vec::with_capacity(n * m);
        for &i in grp {
            let qa = &spaces[i];
            let u = if i == grp[0] {
                CMat::identity(m, m)
            } else {
                let link = qa.adjoint() * &h * q1;
                if linalg::frobenius(&link) < 1e-9 {
                    return Err(Error::DecompositionFailed("random element misses a matrix unit".into()));
                }
                linalg::polar_unitary(&link)
            };
            let v = qa * u;
            for mu in 0..m {
                cols.push(v.column(mu).into_owned());
            }
        }
        let local = CMat::from_columns(&cols);
        blocks.push(CMatBlock { iso: &support * local, left: n, right: m });
    }
    if dim_sum != fixed {
        return Err(Error::DecompositionFailed(format!(
            "fixed algebra has dimension {fixed} but blocks account for {dim_sum}"
        )));
    }
    blocks.sort_by_key(|x| (x.left, x.right));
    Ok(blocks)
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    /// Base64 of little-endian `f64` (re, im) pairs, row-major.
    data: String,
}

impl From<&CMat> for MatrixJson {
    fn from(m: &CMat) -> Self {
        let mut bytes = Vec::with_capacity(m.len() * 16);
        for p in crate::io::matrix_to_pairs(m) {
            bytes.extend_from_slice(&p[0].to_le_bytes());
            bytes.extend_from_slice(&p[1].to_le_bytes());
        }
        Self { rows: m.nrows(), cols: m.ncols(), data: B64.encode(bytes) }
    }
}

impl MatrixJson {
    fn decode(&self) -> Result<CMat> {
        let bytes = B64.decode(&self.data).map_err(|e| Error::Decode(e.to_string()))?;
        if bytes.len() != self.rows * self.cols * 16 {
            return Err(Error::Decode("matrix payload has the wrong length".into()));
        }
        let pairs: Vec<[f64; 2]> = bytes
            .chunks_exact(16)
            .map(|c| [f64::from_le_bytes(c[..8].try_into().unwrap()), f64::from_le_bytes(c[8..].try_into().unwrap())])
            .collect();
        crate::io::pairs_to_matrix(self.rows, self.cols, &pairs)
    }
}

#[derive(Serialize, Deserialize)]
struct BlockJson {
    prob: f64,
    left_dim: usize,
    right_dim: usize,
    iso: MatrixJson,
    left_state: MatrixJson,
    right_state: MatrixJson,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecompositionJson {
    a: FactorLayout,
    b: FactorLayout,
    c: FactorLayout,
    order: Vec<String>,
    blocks: Vec<BlockJson>,
}

impl From<&MarkovDecomposition> for DecompositionJson {
    fn from(d: &MarkovDecomposition) -> Self {
        Self {
            a: d.a.clone(),
            b: d.b.clone(),
            c: d.c.clone(),
            order: d.order.clone(),
            blocks: d
                .blocks
                .iter()
                .map(|b| BlockJson {
                    prob: b.prob,
                    left_dim: b.left_dim(),
                    right_dim: b.right_dim(),
                    iso: (&b.iso).into(),
                    left_state: b.left_state.data().into(),
                    right_state: b.right_state.data().into(),
                })
                .collect(),
        }
    }
}

impl TryFrom<DecompositionJson> for MarkovDecomposition {
    type Error = Error;
    fn try_from(j: DecompositionJson) -> Result<Self> {
        let mut blocks = Vec::with_capacity(j.blocks.len());
        for b in j.blocks {
            let left_layout = j.a.concat(&FactorLayout::new(&[(LEFT, b.left_dim)])?)?;
            let right_layout = FactorLayout::new(&[(RIGHT, b.right_dim)])?.concat(&j.c)?;
            blocks.push(MarkovBlock {
                prob: b.prob,
                iso: b.iso.decode()?,
                left_state: DensityMatrix::new(left_layout, b.left_state.decode()?)?,
                right_state: DensityMatrix::new(right_layout, b.right_state.decode()?)?,
            });
        }
        Ok(Self { a: j.a, b: j.b, c: j.c, order: j.order, blocks })
    }
}

impl MarkovDecomposition {
    /// `id ⊗ P` with `P(ξ) = ⊕_i W_i (Tr_R[W_i† ξ W_i] ⊗ ρ_{R_i}) W_i†` acting on
    /// the middle system, where `ρ_{R_i}` is the right-factor marginal of block `i`.
    pub fn pinch(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let b = self.b.labels();
        let rest = rho.layout().complement(&b)?;
        let mut work_order = rest.clone();
        work_order.extend(b.iter().cloned());
        let work = rho.reorder(&work_order)?;
        let drest = rho.layout().dim_of(&rest)?;
        let id = CMat::identity(drest, drest);
        let mut acc = CMat::zeros(work.dim(), work.dim());
        for blk in &self.blocks {
            let (dl, dr) = (blk.left_dim(), blk.right_dim());
            let w = kron(&id, &blk.iso);
            let inner = w.adjoint() * work.data() * &w;
            let reduced = linalg::trace_second(&inner, drest * dl, dr);
            let rho_r = linalg::trace_second(blk.right_state.data(), dr, self.c.total_dim());
            acc += &w * kron(&reduced, &rho_r) * w.adjoint();
        }
        DensityMatrix::normalized(work.layout().clone(), acc)?.reorder(&rho.labels())
    }
}
