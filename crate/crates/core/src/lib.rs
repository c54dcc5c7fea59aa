//! Numerical core for studying the spectral gap of few-electron
//! Born–Oppenheimer Hamiltonians as nuclei separate into clusters.
//!
//! Everything here is pure computation over `alloc` vectors: tensor-product
//! grid operators, permutation symmetry projectors, a thick-restart block
//! Lanczos solver, cluster bookkeeping with threshold energies, the
//! Feshbach–Schur reduction onto a family of cluster product states, and an
//! IMS partition of unity. File formats, configuration parsing and the CLI
//! live in the `clustergap` crate.
#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod clusters;
pub mod error;
pub mod fsmap;
pub mod grid;
pub mod ims;
pub mod linalg;
pub mod model;
pub mod operators;
pub mod rng;
pub mod spectra;
pub mod symmetry;

pub use error::{Error, Result};
pub use grid::Grid;
pub use linalg::{LinearOperator, Projector};
pub use model::{
    ExperimentConfig, ModelParams, NuclearConfiguration, ParticleSystem, Statistics, Tolerances,
    ValidationReport,
};
pub use operators::ManyBodyOperator;
pub use spectra::{GapResult, SolverOptions, SpectralReport};
pub use symmetry::{Permutation, StatisticsProjector};
