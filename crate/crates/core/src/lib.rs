//! Long-run stock-level analysis of satellite constellation spare strategies.
//!
//! Direct resupply refills each constellation plane from the ground under an
//! `(r, q)` policy. Indirect resupply stages batches in parking orbits whose
//! differential RAAN drift periodically aligns them with each plane. Both are
//! solved analytically as Markov chains, cross-checked by a Monte Carlo
//! simulator, and the direct policy can be optimized against a cost model.

pub mod chain;
pub mod direct;
pub mod error;
pub mod indirect;
pub mod optimize;
pub mod orbit;
pub mod simulate;

pub use error::{Error, Result};
