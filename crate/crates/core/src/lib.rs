pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod hmm;
pub mod model_io;
pub mod pipeline;
pub mod relation;
pub mod rstree;
pub mod segmentation;
pub mod semrules;
pub mod synth;
pub mod tree;
pub mod types;

pub use error::{Error, Result};
