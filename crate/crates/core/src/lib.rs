//! Semi-analytical perturbation propagation for aerocapture trajectories.
//!
//! The crate integrates the entry dynamics together with their variational
//! equations to third order, producing state transition tensors (STTs) over a
//! time grid. From those it builds second-order and higher-order Cauchy-Green
//! tensors (plain, state-selective and quantity-of-interest variants), finds
//! their maximal z-eigenpairs with a shifted symmetric higher-order power
//! method, and uses the eigenvectors to project the STTs onto directional
//! STTs (DSTTs) of reduced latent dimension.
//!
//! Start with [`config::ExperimentConfig::default`], then see the runnable
//! programs under `examples/`.

pub mod cgt;
pub mod config;
pub mod dstt;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod jet;
pub mod output;
pub mod propagation;
pub mod qoi;
pub mod scalar;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
