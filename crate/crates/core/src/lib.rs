//! Multi Expression Programming and sibling linear encodings.
//!
//! The crate is organised bottom-up: [`primitives`] and [`mep`] provide the
//! chromosome machinery, [`engine`] the steady-state loop shared by every
//! representation, and the remaining modules plug problem-specific fitness
//! into that loop.

pub mod circuit;
pub mod engine;
pub mod error;
pub mod games;
pub mod ifgp;
pub mod lgp;
pub mod mep;
pub mod meta_ea;
pub mod nfl;
pub mod primitives;
pub mod problems;
pub mod rng;
pub mod stats;
pub mod tsp;

pub use error::{Error, Result};
pub use rng::SimRng;
