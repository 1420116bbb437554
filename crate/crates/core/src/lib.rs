//! Truncated-binary encoding of cost function networks.
//!
//! A pairwise cost function network is lowered to an exact Ising HUBO by
//! binary-encoding every discrete variable, then projected onto the Walsh
//! modes of degree at most `k_max`. The discarded ℓ1 mass certifies the
//! worst-case error. Everything here is `no_std` + `alloc`; file formats,
//! threading and the command line live in the `tbe` crate.

#![no_std]

extern crate alloc;

pub mod cfn;
pub mod encoder;
pub mod ensemble;
pub mod error;
pub mod landscape;
pub mod poly;
pub mod quadratize;
pub mod random;
pub mod solve;
pub mod spectrum;
pub mod truncate;
pub mod walsh;

pub use cfn::{center, CenteredCfn, Cfn, PairwiseTable, VariableSpec};
pub use encoder::{decode, encode, AssignmentStrategy, Decoded, EncodingLayout, UnusedPolicy};
pub use error::{Error, Result};
pub use poly::{IsingPolynomial, Spins};
pub use spectrum::{table_spectrum, SpectralProfile};
pub use truncate::{certify, residual, truncate, TruncationCertificate};
pub use walsh::{fwht, ZeroOnePolynomial};
