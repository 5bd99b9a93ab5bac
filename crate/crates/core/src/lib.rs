//! Spin squeezing from one-photon two-atom processes in the extended Dicke model.
//!
//! Bottom-up layout: [`hilbert`] builds the truncated Fock x Dicke space,
//! [`models`] the Hamiltonians, [`spectrum`] and [`dynamics`] solve them,
//! [`observables`] measures squeezing, and [`meanfield`] covers the large-N
//! bosonic reduction. [`cli`] drives named scenarios from TOML configs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod meanfield;
pub mod models;
pub mod observables;
pub mod scenarios;
pub mod spectrum;

pub use error::{Error, Result};
