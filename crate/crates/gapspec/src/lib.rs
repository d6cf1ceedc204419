//! Gap solitons of the Hamiltonian coupled-mode system and their spectral stability.
//!
//! The pipeline: closed-form or reconstructed soliton profiles ([`soliton`]) are
//! sampled on a Chebyshev grid ([`spectral_grid`]), the energy operator and its
//! Dirac blocks are assembled ([`operators`]), dense spectra are computed and
//! classified ([`spectrum`]), and counts are tracked over ω ([`bifurcation`]).

pub mod bifurcation;
pub mod cli;
pub mod error;
pub mod operators;
pub mod potential;
pub mod soliton;
pub mod spectral_grid;
pub mod spectrum;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
