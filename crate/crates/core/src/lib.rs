//! Weighted exchangeability on finite alphabets.

pub mod error;
pub mod harness;
pub mod logspace;
pub mod model;
pub mod perm;
pub mod sampler;
pub mod check;
pub mod conditions;
pub mod recovery;
pub mod weights;

pub use error::{Error, Result};
