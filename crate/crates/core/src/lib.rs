pub mod classifier;
pub mod denoise;
pub mod error;
pub mod experiment;
pub mod numcore;
pub mod rng;
pub mod simnet;
pub mod synthdata;

pub use error::{Error, Result};
