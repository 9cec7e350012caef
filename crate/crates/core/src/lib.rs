//! Imaginary quadratic class groups from first principles, the conjectural
//! frequency predictions for class numbers and class groups built on random
//! Euler products and the Cohen–Lenstra measure, and a sharded survey
//! pipeline that tabulates 𝓕(h) and 𝓕(G) for comparison.
//!
//! Everything the survey certifies is conditional on GRH.

pub mod analysis;
pub mod error;
pub mod forms;
pub mod heuristics;
pub mod lestimate;
pub mod numtheory;
pub mod partitions;
pub mod survey;

pub use error::{Error, Result};
