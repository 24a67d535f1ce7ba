use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::tableau::{Pauli, StabilizerTableau};

/// Toric code on an `lx × ly` torus with one qubit per edge.
///
/// Edge `h(x, y)` joins vertices `(x, y)` and `(x+1, y)`; edge `v(x, y)`
/// joins `(x, y)` and `(x, y+1)`. Horizontal edges come first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToricCode {
    #[serde(rename = "Lx")]
    pub lx: usize,
    #[serde(rename = "Ly")]
    pub ly: usize,
}

/// Edge orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    H(usize, usize),
    V(usize, usize),
}

impl ToricCode {
    pub fn new(lx: usize, ly: usize) -> Result<Self> {
        if lx < 2 || ly < 2 {
            return Err(Error::InvalidLattice(format!("{lx}x{ly} torus is too small; need at least 2x2")));
        }
        Ok(Self { lx, ly })
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.lx * self.ly
    }

    fn wrap(&self, x: isize, y: isize) -> (usize, usize) {
        (x.rem_euclid(self.lx as isize) as usize, y.rem_euclid(self.ly as isize) as usize)
    }

    pub fn h(&self, x: isize, y: isize) -> usize {
        let (x, y) = self.wrap(x, y);
        x * self.ly + y
    }

    pub fn v(&self, x: isize, y: isize) -> usize {
        let (x, y) = self.wrap(x, y);
        self.lx * self.ly + x * self.ly + y
    }

    pub fn edge(&self, q: usize) -> Edge {
        let plane = self.lx * self.ly;
        let (kind, r) = if q < plane { (0, q) } else { (1, q - plane) };
        let (x, y) = (r / self.ly, r % self.ly);
        if kind == 0 {
            Edge::H(x, y)
        } else {
            Edge::V(x, y)
        }
    }

    /// The two end vertices of an edge.
    pub fn endpoints(&self, q: usize) -> [(usize, usize); 2] {
        match self.edge(q) {
            Edge::H(x, y) => [(x, y), self.wrap(x as isize + 1, y as isize)],
            Edge::V(x, y) => [(x, y), self.wrap(x as isize, y as isize + 1)],
        }
    }

    /// Shift an edge by a lattice vector.
    pub fn translate(&self, q: usize, dx: isize, dy: isize) -> usize {
        match self.edge(q) {
            Edge::H(x, y) => self.h(x as isize + dx, y as isize + dy),
            Edge::V(x, y) => self.v(x as isize + dx, y as isize + dy),
        }
    }

    pub fn star(&self, x: isize, y: isize) -> Vec<usize> {
        vec![self.h(x, y), self.h(x - 1, y), self.v(x, y), self.v(x, y - 1)]
    }

    pub fn plaquette(&self, x: isize, y: isize) -> Vec<usize> {
        vec![self.h(x, y), self.h(x, y + 1), self.v(x, y), self.v(x + 1, y)]
    }

    /// Ground state fixed by `Z` strings along `y = 0` and `x = 0`.
    pub fn ground_state(&self) -> Result<StabilizerTableau> {
        let n = self.n_qubits();
        let mut gens = Vec::with_capacity(n);
        for x in 0..self.lx as isize {
            for y in 0..self.ly as isize {
                // one star and one plaquette are products of the others
                if (x, y) != (0, 0) {
                    gens.push(Pauli::on(n, &self.star(x, y), true, false));
                    gens.push(Pauli::on(n, &self.plaquette(x, y), false, true));
                }
            }
        }
        let row: Vec<usize> = (0..self.lx as isize).map(|x| self.h(x, 0)).collect();
        let col: Vec<usize> = (0..self.ly as isize).map(|y| self.v(0, y)).collect();
        gens.push(Pauli::on(n, &row, false, true));
        gens.push(Pauli::on(n, &col, false, true));
        StabilizerTableau::new(n, gens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn small_lattice_is_rejected() {
        assert!(matches!(ToricCode::new(1, 4), Err(Error::InvalidLattice(_))));
    }

    #[test]
    fn two_by_two_has_eight_generators() {
        let t = ToricCode::new(2, 2).unwrap().ground_state().unwrap();
        assert_eq!(t.n_qubits(), 8);
        assert_eq!(t.generators().len(), 8);
    }

    #[test]
    fn four_by_four_is_pure_and_commuting() {
        let code = ToricCode::new(4, 4).unwrap();
        let t = code.ground_state().unwrap();
        assert_eq!(t.generators().len(), 32);
        assert!(t.is_pure());
        let g = t.generators();
        assert!(g.iter().all(|a| g.iter().all(|b| a.commutes(b))));
    }

    #[test]
    fn region_entropy_examples() {
        let code = ToricCode::new(4, 4).unwrap();
        let t = code.ground_state().unwrap();
        assert!((t.region_entropy(&[code.h(1, 1)]).unwrap() - LN_2).abs() < 1e-15);
        let star = code.star(2, 2);
        assert_eq!(t.region_entropy_bits(&star).unwrap(), 3);
        let comp: Vec<usize> = (0..32).filter(|q| !star.contains(q)).collect();
        assert_eq!(t.region_entropy_bits(&comp).unwrap(), 3);
    }

    #[test]
    fn endpoints_match_star_membership() {
        let code = ToricCode::new(3, 4).unwrap();
        for x in 0..3 {
            for y in 0..4 {
                for q in code.star(x, y) {
                    assert!(code.endpoints(q).contains(&(x as usize, y as usize)));
                }
            }
        }
    }
}
