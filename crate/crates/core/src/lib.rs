//! Gaussian-width experimental design and pure-exploration algorithms for
//! transductive linear and combinatorial bandits.

pub mod algorithms;
pub mod config;
pub mod design_opt;
pub mod env;
pub mod error;
pub mod experiment;
pub mod instance_file;
pub mod instances;
pub mod item;
pub mod linalg;
pub mod oracles;
pub mod pointset;
pub mod selftest;
pub mod width;

pub use error::{Error, Result};
