pub mod cli;
pub mod error;
pub mod experiments;
pub mod models;
pub mod noise;
pub mod oracles;
pub mod schemes;
pub mod spectral;

pub use error::{Error, Result};
