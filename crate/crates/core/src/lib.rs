pub mod batch;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod segment;
pub mod signal;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
