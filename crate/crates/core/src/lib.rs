pub mod cli;
pub mod dataset;
pub mod embeddings;
pub mod error;
pub mod model;
pub mod nn;
pub mod scoring;
pub mod synthetic;
pub mod text;
pub mod trainer;

pub use error::{Error, Result};
