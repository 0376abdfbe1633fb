pub mod annealing;
pub mod error;
pub mod exec;
pub mod hamiltonian;
pub mod jumps;
pub mod kms;
pub mod numerics;
pub mod parent;
pub mod projector;
pub mod sampler;

pub use error::{Error, Result};
