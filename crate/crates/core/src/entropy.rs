//! Entropic functionals in nats.

use crate::error::{Error, Result};
use crate::linalg::{self, eigh, eta, CMat};
use crate::state::DensityMatrix;

/// Weight of `ρ` outside the support of `σ` above which the relative entropy is infinite.
pub const SUPPORT_LEAK_TOL: f64 = 1e-12;

pub fn entropy_of_matrix(m: &CMat) -> f64 {
    let e = eigh(m);
    let cut = e.cutoff();
    e.values.iter().filter(|&&v| v > cut).map(|&v| eta(v)).sum()
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_matrix(rho.data())
}

/// Entropy of the marginal on `labels`; the empty set has entropy zero.
pub fn entropy_of<S: AsRef<str>>(rho: &DensityMatrix, labels: &[S]) -> Result<f64> {
    if labels.is_empty() {
        return Ok(0.0);
    }
    Ok(von_neumann_entropy(&rho.partial_trace(labels)?))
}

pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.layout() != sigma.layout() {
        return Err(Error::LayoutMismatch("relative entropy needs equal layouts".into()));
    }
    relative_entropy_matrix(rho.data(), sigma.data())
}

pub fn relative_entropy_matrix(rho: &CMat, sigma: &CMat) -> Result<f64> {
    let es = eigh(sigma);
    let ker = es.kernel();
    let leak = if ker.ncols() == 0 { 0.0 } else { (ker.adjoint() * rho * &ker).trace().re };
    if leak > SUPPORT_LEAK_TOL {
        return Err(Error::SupportMismatch { leak });
    }
    let cut = es.cutoff();
    let log_sigma = es.map(|v| if v > cut { v.ln() } else { 0.0 });
    let cross = (rho * log_sigma).trace().re;
    Ok(-entropy_of_matrix(rho) - cross)
}

fn check_disjoint(sets: &[&[String]]) -> Result<()> {
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            if let Some(x) = a.iter().find(|x| b.contains(x)) {
                return Err(Error::OverlappingRegions(x.clone()));
            }
        }
    }
    Ok(())
}

fn owned<S: AsRef<str>>(s: &[S]) -> Vec<String> {
    s.iter().map(|x| x.as_ref().to_string()).collect()
}

fn union(sets: &[&[String]]) -> Vec<String> {
    sets.iter().flat_map(|s| s.iter().cloned()).collect()
}

pub fn mutual_information<S: AsRef<str>, T: AsRef<str>>(rho: &DensityMatrix, a: &[S], b: &[T]) -> Result<f64> {
    let (a, b) = (owned(a), owned(b));
    check_disjoint(&[&a, &b])?;
    Ok(entropy_of(rho, &a)? + entropy_of(rho, &b)? - entropy_of(rho, &union(&[&a, &b]))?)
}

/// `I(A:C|B) = S(AB) + S(BC) − S(B) − S(ABC)`.
pub fn conditional_mutual_information<S: AsRef<str>, T: AsRef<str>, U: AsRef<str>>(
    rho: &DensityMatrix,
    a: &[S],
    b: &[T],
    c: &[U],
) -> Result<f64> {
    let (a, b, c) = (owned(a), owned(b), owned(c));
    check_disjoint(&[&a, &b, &c])?;
    Ok(entropy_of(rho, &union(&[&a, &b]))? + entropy_of(rho, &union(&[&b, &c]))?
        - entropy_of(rho, &b)?
        - entropy_of(rho, &union(&[&a, &b, &c]))?)
}

/// `Σ_i S(ρ_i) − S(ρ)` over a partition of the layout.
pub fn total_correlation<S: AsRef<str>>(rho: &DensityMatrix, parts: &[Vec<S>]) -> Result<f64> {
    let parts: Vec<Vec<String>> = parts.iter().map(|p| owned(p)).collect();
    check_partition(rho, &parts)?;
    let mut sum = 0.0;
    for p in &parts {
        sum += entropy_of(rho, p)?;
    }
    Ok(sum - von_neumann_entropy(rho))
}

/// Every label appears in exactly one nonempty part.
pub fn check_partition(rho: &DensityMatrix, parts: &[Vec<String>]) -> Result<()> {
    let refs: Vec<&[String]> = parts.iter().map(|p| p.as_slice()).collect();
    check_disjoint(&refs)?;
    for p in parts {
        if p.is_empty() {
            return Err(Error::InvalidLayout("empty part in partition".into()));
        }
        rho.layout().positions(p)?;
    }
    let covered: usize = parts.iter().map(|p| p.len()).sum();
    if covered != rho.layout().len() {
        return Err(Error::InvalidLayout("parts do not cover every site".into()));
    }
    Ok(())
}

/// Unnormalized trace distance `‖a − b‖₁`, in `[0, 2]`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.layout() != b.layout() {
        return Err(Error::LayoutMismatch("trace distance needs equal layouts".into()));
    }
    Ok(linalg::trace_norm_herm(&(a.data() - b.data())))
}

/// Root fidelity `Tr √(√ρ σ √ρ)`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.layout() != b.layout() {
        return Err(Error::LayoutMismatch("fidelity needs equal layouts".into()));
    }
    let s = linalg::psd_sqrt(a.data());
    let m = &s * b.data() * &s;
    let e = eigh(&m);
    let f: f64 = e.values.iter().map(|&v| v.max(0.0).sqrt()).sum();
    Ok(f.min(1.0))
}

/// Rank at the shared cutoff.
pub fn rank(rho: &DensityMatrix) -> usize {
    eigh(rho.data()).rank()
}
