//! Exact stabilizer-state entropies over GF(2) and the toric code.

pub mod gf2;
pub mod mask;
pub mod tableau;
pub mod tee;
pub mod toric;

pub use mask::{Geometry, RegionMask};
pub use tableau::{Pauli, StabilizerTableau, DENSE_QUBIT_LIMIT};
pub use tee::{tee, tee_bits};
pub use toric::ToricCode;
