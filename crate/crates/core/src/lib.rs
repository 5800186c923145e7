//! Brown–Ravenhall operators on periodic grids: the free Dirac projector in
//! momentum and coordinate representation, the one- and two-electron forms,
//! and numerical checks of the spectral-theory lemmas built on them.

pub mod besselk;
pub mod cutoff;
pub mod dirac;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod hartree;
pub mod io;
pub mod lab;
pub mod lanczos;
pub mod projector;
pub mod quad;
pub mod radial;
pub mod real;
pub mod slater;

pub use error::{Error, Result};
pub use real::Real;

pub type Grid64 = grid::Grid<f64>;
pub type Grid32 = grid::Grid<f32>;
pub type SpinorField64 = grid::SpinorField<f64>;
pub type SpinorField32 = grid::SpinorField<f32>;
pub type FourierField64 = grid::FourierField<f64>;
pub type ScalarField64 = grid::ScalarField<f64>;
pub type Spinor64 = dirac::Spinor<f64>;
