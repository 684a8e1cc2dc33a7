//! Deep evolutionary learning over a latent space.
//!
//! Multi-objective evolutionary search (NSGA-II ranking, crowding, latent
//! recombination and mutation) runs on the latent codes of a small sequence
//! VAE with a property-prediction head. Each generation's merged population
//! is fed back to fine-tune the model, so data and model co-evolve.
//!
//! The crate is `no_std` and only needs `alloc`. Everything touching the
//! filesystem, configuration files or the command line lives in the `del`
//! companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod dgm;
pub mod engine;
mod error;
pub mod evo;
pub mod pareto;
pub mod rng;
pub mod toy;

pub use error::{Error, Result};
pub use pareto::{FrontAssignment, ObjectiveVector};
