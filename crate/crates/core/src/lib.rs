//! Exact algebra behind chromatic orientation and nilpotence questions:
//! Witt vectors, Dieudonne modules and their exterior powers, truncated
//! formal group laws, Hazewinkel `BP<h>` p-series, and a Hopf-ring proof
//! replay engine.

pub mod bp;
pub mod cli;
pub mod dieudonne;
pub mod error;
pub mod fgl;
pub mod hopfring;
pub mod padic;
pub mod residue;
pub mod series;

pub use error::{Error, Result};
