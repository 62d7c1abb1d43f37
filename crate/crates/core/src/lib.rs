//! Functional Hungarian (KMT) coupling for independent, non-identically
//! distributed summands.
//!
//! Given independent Gaussians `N_1..N_n`, the construction in [`coupling`]
//! produces `X̃_1..X̃_n`, a deterministic function of the Gaussians, with
//! `X̃_i` equal in law to a prescribed `X_i`. Every law involved is a
//! [`LatticeGaussianMixture`] (lattice atoms smeared by a common Gaussian),
//! a family closed under the convolutions the construction performs, so all
//! distribution functions and conditional laws are computed exactly.
//!
//! The crate is `no_std` and only needs `alloc`. IO, configuration and the
//! Monte Carlo driver live in the `kmt-sim` companion crate.

#![no_std]

extern crate alloc;

pub mod blocking;
pub mod conditions;
pub mod coupling;
mod error;
pub mod haar;
pub mod law;
mod mixture;
pub mod quadrature;
pub mod roots;
pub mod special;

pub use error::Error;
pub use law::{ConvolveOptions, LatticeGaussianMixture};

pub type Result<T, E = Error> = core::result::Result<T, E>;
