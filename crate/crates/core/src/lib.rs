//! Spectral Galerkin and phase-space toolkit for non-self-adjoint magnetic
//! Schrödinger and Pauli operators.

pub mod basis;
pub mod config;
pub mod eigen;
pub mod enclosure;
pub mod error;
pub mod operator;
pub mod output;
pub mod phase_space;
pub mod potential;
pub mod runner;
pub mod norms;
pub mod special;
pub mod verdict;

pub use error::{Error, Result};
pub use verdict::Verdict;
