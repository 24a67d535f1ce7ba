use crate::linalg::{eigh, CMat};

/// Default relative tolerance for merging eigenvalues.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Eigenvalues grouped into degenerate eigenspaces, in descending order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// One representative value (group mean) per eigenspace.
    pub eigenvalues: Vec<f64>,
    pub degeneracies: Vec<usize>,
    /// Orthonormal basis of each eigenspace, as columns.
    pub bases: Vec<CMat>,
    pub projectors: Vec<CMat>,
    pub distinct_count: usize,
}

impl Spectrum {
    /// Reassemble `Σ λ_k Π_k`.
    pub fn reconstruct(&self) -> CMat {
        let n = self.projectors.first().map_or(0, |p| p.nrows());
        let mut acc = CMat::zeros(n, n);
        for (v, p) in self.eigenvalues.iter().zip(&self.projectors) {
            acc += p.scale(*v);
        }
        acc
    }

    /// Number of distinct eigenvalues above `abs_cut`.
    pub fn distinct_above(&self, abs_cut: f64) -> usize {
        self.eigenvalues.iter().filter(|&&v| v > abs_cut).count()
    }
}

/// Group eigenvalues with `|λ − λ_lead| ≤ rel_tol · λ_max`, where `λ_lead`
/// is the largest member of the current group.
pub fn spectral(m: &CMat, rel_tol: f64) -> Spectrum {
    let e = eigh(m);
    let scale = e.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tol = rel_tol * scale;
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for k in 1..=e.values.len() {
        if k == e.values.len() || (e.values[start] - e.values[k]).abs() > tol {
            groups.push((start, k));
            start = k;
        }
    }
    let mut out = Spectrum {
        eigenvalues: Vec::new(),
        degeneracies: Vec::new(),
        bases: Vec::new(),
        projectors: Vec::new(),
        distinct_count: groups.len(),
    };
    for (s, t) in groups {
        let basis = e.vectors.columns(s, t - s).into_owned();
        out.eigenvalues.push(e.values[s..t].iter().sum::<f64>() / (t - s) as f64);
        out.degeneracies.push(t - s);
        out.projectors.push(&basis * basis.adjoint());
        out.bases.push(basis);
    }
    out
}
