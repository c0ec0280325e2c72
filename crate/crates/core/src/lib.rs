//! Supersymmetric coherent states for trigonometric Poschl-Teller wells.
//!
//! All numerics run in reduced units (see [`physical_model`]): positions in
//! `[0, pi]`, momenta in units of `pi hbar / L`, energies in units of
//! `E0 = hbar^2 pi^2 / (2 m L^2)`.

pub mod checks;
pub mod coherent_states;
pub mod cs_quantization;
pub mod dynamics;
pub mod eigensystem;
pub mod error;
pub mod io;
pub mod physical_model;
pub mod special_functions;
pub mod susy_ladder;
pub mod wavefunction;

pub use error::{Error, Result};
