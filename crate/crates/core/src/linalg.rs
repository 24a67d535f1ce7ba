//! Dense complex kernels shared by every module: Hermitian eigensolves,
//! spectral matrix functions, Kronecker products and random ensembles.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Eigenvalues below `EIG_CUTOFF * λ_max` are treated as exact zeros.
pub const EIG_CUTOFF: f64 = 1e-12;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eigh {
    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Absolute threshold below which an eigenvalue is considered zero.
    pub fn cutoff(&self) -> f64 {
        EIG_CUTOFF * self.max().abs().max(f64::MIN_POSITIVE)
    }

    pub fn rank(&self) -> usize {
        let cut = self.cutoff();
        self.values.iter().filter(|&&v| v > cut).count()
    }

    /// Rebuild `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            for i in 0..n {
                scaled[(i, j)] *= fv;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// Orthonormal basis of the eigenvectors above the cutoff.
    pub fn support(&self) -> CMat {
        let r = self.rank();
        self.vectors.columns(0, r).into_owned()
    }

    /// Orthonormal basis of the numerical kernel.
    pub fn kernel(&self) -> CMat {
        let r = self.rank();
        let n = self.vectors.ncols();
        self.vectors.columns(r, n - r).into_owned()
    }
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn eigh(m: &CMat) -> Eigh {
    let h = hermitize(m);
    let eig = h.clone().symmetric_eigen();
    // the QR iteration can stall at residuals near 1e-9 on larger inputs;
    // a few Jacobi sweeps on the nearly diagonal V†HV recover full accuracy
    let mut v = eig.eigenvectors;
    let mut a = hermitize(&(v.adjoint() * &h * &v));
    jacobi_polish(&mut a, &mut v);
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].re.total_cmp(&a[(x, x)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = CMat::from_fn(n, n, |i, j| v[(i, order[j])]);
    Eigh { values, vectors }
}

/// Cyclic complex Jacobi rotations driving the Hermitian `a` to diagonal form,
/// accumulating the rotations into the columns of `v`.
fn jacobi_polish(a: &mut CMat, v: &mut CMat) {
    let n = a.nrows();
    let scale = frobenius(a).max(f64::MIN_POSITIVE);
    for _ in 0..30 {
        let off: f64 = (0..n).flat_map(|p| (p + 1..n).map(move |q| (p, q))).map(|(p, q)| a[(p, q)].norm_sqr()).sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 || mag <= 1e-18 * scale {
                    continue;
                }
                let phase = apq / mag;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = if tau == 0.0 { 1.0 } else { tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt()) };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // columns: p' = c p − s e^{-iφ} q, q' = s p + c e^{-iφ} q
                let w = phase.conj();
                for i in 0..n {
                    let (xp, xq) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = xp * cs - xq * w * sn;
                    a[(i, q)] = xp * sn + xq * w * cs;
                    let (yp, yq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = yp * cs - yq * w * sn;
                    v[(i, q)] = yp * sn + yq * w * cs;
                }
                for j in 0..n {
                    let (xp, xq) = (a[(p, j)], a[(q, j)]);
                    a[(p, j)] = xp * cs - xq * w.conj() * sn;
                    a[(q, j)] = xp * sn + xq * w.conj() * cs;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
            }
        }
    }
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Largest absolute entry of `m - m†`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Schatten-1 norm of a Hermitian matrix.
pub fn trace_norm_herm(m: &CMat) -> f64 {
    eigh(m).values.iter().map(|v| v.abs()).sum()
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `Σ λ^p` over the support, with zero eigenvalues mapped to zero (pseudo-power).
pub fn psd_power(m: &CMat, p: f64) -> CMat {
    let e = eigh(m);
    let cut = e.cutoff();
    e.map(|v| if v > cut { v.powf(p) } else { 0.0 })
}

pub fn psd_sqrt(m: &CMat) -> CMat {
    let e = eigh(m);
    e.map(|v| v.max(0.0).sqrt())
}

/// Logarithm with eigenvalues below the cutoff replaced by `eps`.
pub fn log_eps(m: &CMat, eps: f64) -> CMat {
    let e = eigh(m);
    let cut = e.cutoff();
    e.map(|v| if v > cut { v.ln() } else { eps.ln() })
}

/// `exp(H)/Tr exp(H)` for Hermitian `H`, shifted for numerical stability.
pub fn gibbs(h: &CMat) -> CMat {
    let e = eigh(h);
    let top = e.max();
    let z: f64 = e.values.iter().map(|v| (v - top).exp()).sum();
    e.map(|v| (v - top).exp() / z)
}

/// Unitary factor `U V†` of the polar decomposition of a square matrix.
pub fn polar_unitary(m: &CMat) -> CMat {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    u * vt
}

/// Columns of `m` projected to an orthonormal set via modified Gram-Schmidt,
/// dropping columns whose residual norm falls below `tol`.
pub fn orthonormalize(m: &CMat, tol: f64) -> CMat {
    let mut cols: Vec<nalgebra::DVector<C64>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        for _ in 0..2 {
            for q in &cols {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let n = v.norm();
        if n > tol {
            cols.push(v / c(n));
        }
    }
    if cols.is_empty() {
        return CMat::zeros(m.nrows(), 0);
    }
    CMat::from_columns(&cols)
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = ginibre(rng, n, n);
    let qr = g.qr();
    let (q, r) = qr.unpack();
    let mut q = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Random density matrix `G G† / Tr` with `G` an `n × rank` Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMat {
    let g = ginibre(rng, n, rank.max(1));
    let m = &g * g.adjoint();
    let t = trace(&m).re;
    hermitize(&m.unscale(t))
}

/// Random Hermitian matrix drawn from the Gaussian unitary ensemble.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = ginibre(rng, n, n);
    hermitize(&g)
}

/// Kraus-form isometry for a random channel: stacking `kraus` blocks of
/// size `d_out × d_in` gives `V` with `V†V = I`.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let u = random_unitary(rng, rows);
    u.columns(0, cols).into_owned()
}

/// Trace out the second factor of a `da·db` square matrix.
pub fn trace_second(m: &CMat, da: usize, db: usize) -> CMat {
    CMat::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum())
}

/// Trace out the first factor of a `da·db` square matrix.
pub fn trace_first(m: &CMat, da: usize, db: usize) -> CMat {
    CMat::from_fn(db, db, |i, j| (0..da).map(|k| m[(k * db + i, k * db + j)]).sum())
}

/// Shannon entropy in nats with the `0 log 0 = 0` convention.
pub fn shannon(p: &[f64]) -> f64 {
    p.iter().map(|&x| eta(x)).sum()
}

/// `η(x) = −x ln x`, zero at the origin and for `x` below the cutoff.
pub fn eta(x: f64) -> f64 {
    if x <= EIG_CUTOFF {
        0.0
    } else {
        -x * x.ln()
    }
}
