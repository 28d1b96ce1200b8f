pub mod analysis;
pub mod cli;
pub mod coefficients;
pub mod error;
pub mod path_algebra;
pub mod signals;
pub mod solver;

pub use error::{Error, Result};
