//! Code books built from eigenspace twirls and the secret-sharing rate they reach.

pub mod rate;
pub mod twirl;

pub use rate::{rate_report, CopyBound, RateReport, RATE_REL_TOL};
pub use twirl::{annulus_twirl, grouped_spectrum, link_twirl, weyl, TwirlBlock, TwirlEnsemble};
