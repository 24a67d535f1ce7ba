use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::layout::FactorLayout;
use crate::linalg::{CMat, C64};
use crate::state::DensityMatrix;

use super::gf2::{self, BitVec};

/// Largest region for which `rdm_dense` builds a matrix.
pub const DENSE_QUBIT_LIMIT: usize = 12;

/// Pauli operator `i^phase · X^x Z^z` on `n` qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pauli {
    pub x: BitVec,
    pub z: BitVec,
    pub phase: u8,
}

impl Pauli {
    pub fn identity(n: usize) -> Self {
        Self { x: BitVec::zeros(n), z: BitVec::zeros(n), phase: 0 }
    }

    pub fn n_qubits(&self) -> usize {
        self.x.len()
    }

    /// Parse a string over `IXYZ`, optionally prefixed by `+` or `-`.
    pub fn parse(s: &str) -> Result<Self> {
        let (sign, body) = match s.as_bytes().first() {
            Some(b'-') => (2, &s[1..]),
            Some(b'+') => (0, &s[1..]),
            _ => (0, s),
        };
        let n = body.chars().count();
        let mut p = Self::identity(n);
        p.phase = sign;
        for (i, ch) in body.chars().enumerate() {
            match ch {
                'I' => {}
                'X' => p.x.set(i, true),
                'Z' => p.z.set(i, true),
                // Y = i X Z
                'Y' => {
                    p.x.set(i, true);
                    p.z.set(i, true);
                    p.phase = (p.phase + 1) % 4;
                }
                _ => return Err(Error::Decode(format!("bad Pauli letter `{ch}`"))),
            }
        }
        Ok(p)
    }

    /// X-type or Z-type operator on the listed qubits.
    pub fn on(n: usize, support: &[usize], x: bool, z: bool) -> Self {
        let mut p = Self::identity(n);
        for &q in support {
            p.x.set(q, x);
            p.z.set(q, z);
        }
        p
    }

    pub fn commutes(&self, other: &Pauli) -> bool {
        self.x.and_parity(&other.z) == other.x.and_parity(&self.z)
    }

    pub fn mul(&self, other: &Pauli) -> Pauli {
        // X^x1 Z^z1 X^x2 Z^z2 = (−1)^{z1·x2} X^{x1+x2} Z^{z1+z2}
        let mut x = self.x.clone();
        x.xor_assign(&other.x);
        let mut z = self.z.clone();
        z.xor_assign(&other.z);
        let sign = if self.z.and_parity(&other.x) { 2 } else { 0 };
        Pauli { x, z, phase: (self.phase + other.phase + sign) % 4 }
    }

    /// Support qubits, i.e. those with a non-identity factor.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n_qubits()).filter(|&q| self.x.get(q) || self.z.get(q)).collect()
    }

    fn symplectic(&self) -> BitVec {
        self.x.concat(&self.z)
    }
}

/// Stabilizer state given by independent commuting Pauli generators.
#[derive(Debug, Clone)]
pub struct StabilizerTableau {
    n: usize,
    generators: Vec<Pauli>,
}

impl StabilizerTableau {
    pub fn new(n: usize, generators: Vec<Pauli>) -> Result<Self> {
        for g in &generators {
            if g.n_qubits() != n {
                return Err(Error::InvalidState("generator length differs from qubit count".into()));
            }
            if g.phase % 2 == 1 {
                return Err(Error::InvalidState("generator is not Hermitian".into()));
            }
        }
        for (i, a) in generators.iter().enumerate() {
            for b in &generators[i + 1..] {
                if !a.commutes(b) {
                    return Err(Error::InvalidState("generators do not commute".into()));
                }
            }
        }
        let rows: Vec<BitVec> = generators.iter().map(Pauli::symplectic).collect();
        if gf2::rank(&rows) != generators.len() {
            return Err(Error::InvalidState("generators are linearly dependent".into()));
        }
        Ok(Self { n, generators })
    }

    pub fn from_strings(gens: &[&str]) -> Result<Self> {
        let paulis: Vec<Pauli> = gens.iter().map(|s| Pauli::parse(s)).collect::<Result<_>>()?;
        let n = paulis.first().map_or(0, Pauli::n_qubits);
        Self::new(n, paulis)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[Pauli] {
        &self.generators
    }

    pub fn is_pure(&self) -> bool {
        self.generators.len() == self.n
    }

    fn check_region(&self, region: &[usize]) -> Result<Vec<usize>> {
        let mut r = region.to_vec();
        r.sort_unstable();
        r.dedup();
        if r.len() != region.len() {
            return Err(Error::InvalidMask("repeated qubit in region".into()));
        }
        if let Some(&q) = r.iter().find(|&&q| q >= self.n) {
            return Err(Error::InvalidMask(format!("qubit {q} out of range")));
        }
        Ok(r)
    }

    fn complement(&self, region: &[usize]) -> Vec<usize> {
        (0..self.n).filter(|q| region.binary_search(q).is_err()).collect()
    }

    fn restricted_rows(&self, cols: &[usize]) -> Vec<BitVec> {
        self.generators.iter().map(|g| g.x.gather(cols).concat(&g.z.gather(cols))).collect()
    }

    /// Dimension of the subgroup supported inside `region`.
    pub fn inner_rank(&self, region: &[usize]) -> Result<usize> {
        let r = self.check_region(region)?;
        let comp = self.complement(&r);
        Ok(self.generators.len() - gf2::rank(&self.restricted_rows(&comp)))
    }

    /// Entropy of the region in bits; always an integer.
    pub fn region_entropy_bits(&self, region: &[usize]) -> Result<usize> {
        let inner = self.inner_rank(region)?;
        Ok(region.len() - inner)
    }

    /// Region entropy in nats.
    pub fn region_entropy(&self, region: &[usize]) -> Result<f64> {
        Ok(self.region_entropy_bits(region)? as f64 * LN_2)
    }

    /// Generators of the subgroup supported inside `region`.
    pub fn inner_subgroup(&self, region: &[usize]) -> Result<Vec<Pauli>> {
        let r = self.check_region(region)?;
        let comp = self.complement(&r);
        let ker = gf2::left_kernel(&self.restricted_rows(&comp));
        Ok(ker.iter().map(|c| c.ones().fold(Pauli::identity(self.n), |acc, i| acc.mul(&self.generators[i]))).collect())
    }

    /// Dense reduced state on `region`; the layout labels are `q{index}` in
    /// ascending qubit order.
    pub fn rdm_dense(&self, region: &[usize]) -> Result<DensityMatrix> {
        let r = self.check_region(region)?;
        if r.len() > DENSE_QUBIT_LIMIT {
            return Err(Error::DenseLimitExceeded { qubits: r.len(), limit: DENSE_QUBIT_LIMIT });
        }
        if r.is_empty() {
            return Err(Error::InvalidMask("empty region".into()));
        }
        let labels: Vec<String> = r.iter().map(|q| format!("q{q}")).collect();
        let layout = FactorLayout::qubits(&labels)?;
        let gens: Vec<Pauli> = self
            .inner_subgroup(&r)?
            .iter()
            .map(|g| Pauli { x: g.x.gather(&r), z: g.z.gather(&r), phase: g.phase })
            .collect();
        let m = r.len();
        let dim = 1usize << m;
        let mut acc = CMat::zeros(dim, dim);
        // walk the group in Gray-code order
        let mut elem = Pauli::identity(m);
        let count = 1usize << gens.len();
        for step in 0..count {
            if step > 0 {
                let flip = step.trailing_zeros() as usize;
                elem = elem.mul(&gens[flip]);
            }
            add_pauli(&mut acc, &elem);
        }
        DensityMatrix::new(layout, acc.unscale(dim as f64))
    }
}

/// Bit index `k` of a basis label belongs to qubit `k`, with qubit 0 the most significant.
fn to_index(bits: &BitVec) -> usize {
    let m = bits.len();
    bits.ones().fold(0, |acc, k| acc | 1 << (m - 1 - k))
}

fn add_pauli(acc: &mut CMat, p: &Pauli) {
    let dim = acc.nrows();
    let xmask = to_index(&p.x);
    let zmask = to_index(&p.z);
    let base = match p.phase {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    };
    for j in 0..dim {
        let sign = if (zmask & j).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        acc[(j ^ xmask, j)] += base * sign;
    }
}
