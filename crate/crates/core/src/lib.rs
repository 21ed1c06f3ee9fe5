//! Classical and quantum probability toolkit.

pub mod chsh;
pub mod classical;
pub mod error;
pub mod format;
pub mod frequency;
pub mod gksl;
pub mod instruments;
pub mod linalg;
pub mod logic;
pub mod par;
pub mod quantum;
pub mod random;
pub mod rng;
pub mod scenarios;

pub use error::{Error, Result};
