use crate::error::Result;

use super::mask::RegionMask;
use super::tableau::StabilizerTableau;

fn union(parts: &[&[usize]]) -> Vec<usize> {
    let mut u: Vec<usize> = parts.iter().flat_map(|p| p.iter().copied()).collect();
    u.sort_unstable();
    u
}

/// `S(AB) + S(BC) + S(CA) − S(A) − S(B) − S(C) − S(ABC)` in bits.
pub fn tee_bits(tab: &StabilizerTableau, a: &[usize], b: &[usize], c: &[usize]) -> Result<i64> {
    let s = |r: Vec<usize>| tab.region_entropy_bits(&r).map(|v| v as i64);
    Ok(s(union(&[a, b]))? + s(union(&[b, c]))? + s(union(&[c, a]))?
        - s(a.to_vec())?
        - s(b.to_vec())?
        - s(c.to_vec())?
        - s(union(&[a, b, c]))?)
}

/// Topological entanglement entropy of a mask, in nats.
pub fn tee(tab: &StabilizerTableau, mask: &RegionMask) -> Result<f64> {
    Ok(tee_bits(tab, mask.a(), mask.b(), mask.c())? as f64 * std::f64::consts::LN_2)
}
