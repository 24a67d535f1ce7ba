//! Dense and stabilizer tools for multipartite quantum states: entropies,
//! quantum Markov chains, maximum-entropy merging, irreducible correlations
//! and secret-sharing rates.

pub mod approx;
pub mod entropy;
pub mod error;
pub mod io;
pub mod layout;
pub mod linalg;
pub mod markov;
pub mod maxent;
pub mod models;
pub mod secret;
pub mod spectral;
pub mod stabilizer;
pub mod state;

pub use error::{Error, Result};
pub use layout::FactorLayout;
pub use spectral::{spectral, Spectrum};
pub use state::DensityMatrix;
