//! Variational Bayes for linear inverse problems `y = Kx + ε` with
//! nearest-neighbour shrinkage penalties on the differences `Lx`.
//!
//! The crate is `no_std` (with `alloc`). File formats and the command line
//! driver live in the companion `vbip` crate.
#![no_std]

extern crate alloc;

pub mod banded;
pub mod contrast;
pub mod data;
pub mod error;
pub mod expfam;
pub mod kernels;
pub mod math;
pub mod matrix;
pub mod mcmc;
pub mod metrics;
pub mod mfvb;
pub mod model;
pub mod penalties;
pub mod special;
pub mod vmp;

pub use banded::{BandedMatrix, BandedSpdMatrix, CholeskyFactor, SelectedInverse, SelectedInversePattern};
pub use contrast::GridShape;
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{FitResult, ModelHyperparams, Problem};
pub use penalties::{PenaltyFamily, PenaltySpec};
