//! Spectral Galerkin truncation of the two-dimensional averaged-Euler
//! equations in stream-function form, together with the Gaussian (Gibbs)
//! measure built from the enstrophy and its conditional measures on energy
//! level sets.
//!
//! The crate is `no_std` with `alloc`. The `std` feature (on by default)
//! adds the transform-based evaluation of the vector field in [`fast`].
//!
//! Conventions used throughout:
//!
//! * Fourier basis `e_k(x) = exp(i k·x) / 2π` on the 2π-torus.
//! * A real field is stored by its coefficients on the positive half lattice
//!   (`k1 > 0`, or `k1 == 0 && k2 > 0`); `ω_{-k} = conj(ω_k)` and `ω_0 = 0`.
//! * `λ'_k = |k|² (1 + a²|k|²)^s` is the symbol of `-AΔ`; the Sobolev weight of
//!   order `p` is `λ'_k^p`.
#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod dynamics;
pub mod error;
#[cfg(feature = "std")]
pub mod fast;
pub mod integrate;
pub mod lattice;
mod math;
pub mod measures;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
pub use lattice::{CoeffTable, ModeIndex, ModelParams, SpectralField, Truncation};
pub use num_complex::Complex64;
