//! Ground-space structure and phase classification for translation-invariant,
//! commuting, frustration-free spin chains with periodic boundary conditions.
//!
//! The pipeline starts from a single two-site term. It is replaced by the
//! projector onto its positive eigenspaces ([`operators`]), the site space is
//! split into blocks `H_l ⊗ H_r` ([`decomposition`]), the bond factors between
//! blocks define a weighted directed graph ([`graph`]) whose cycles give the
//! ground space and whose transfer matrices give the full energy census
//! ([`groundspace`]). Scale-invariant chains are reduced to the canonical
//! representative of their phase ([`canonical`]); [`bridge`] maps some
//! non-commuting terms to commuting ones and back. [`ed`] is a brute-force
//! exact-diagonalization oracle used to cross-check all of the above.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod bridge;
pub mod canonical;
pub mod corpus;
pub mod decomposition;
pub mod ed;
pub mod error;
pub mod graph;
pub mod groundspace;
pub mod linalg;
pub mod models;
pub mod operators;

pub use error::{Error, FactorFamily, LinalgError, Result};
pub use linalg::{c64, CMatrix};
pub use num_bigint::BigUint;
pub use operators::{BlockDims, LocalTerm, ProjectorTerm, TwoSite};

/// Default numerical tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
