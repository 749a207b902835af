pub mod align;
pub mod baselines;
pub mod cli;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod io;
pub mod method;
pub mod shrinkage;
pub mod spectral;

pub use embedding::Embedding;
pub use error::{Error, Result};
pub use method::{Method, Processed};
