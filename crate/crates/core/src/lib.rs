//! Parabolic double phase energies and their space-time mollification.
//!
//! The crate evaluates the double phase integrand `H(z, ξ) = |ξ|^p + a(z)|ξ|^q`,
//! the energies built from it on discrete space-time grids, and the anisotropic
//! mollifier `κ_h(x, t) = h^{-n-2} κ(x/h, t/h²)`. On top of that, the
//! [`verification`] module measures every inequality and limit used to show that
//! mollified fields approximate a finite-energy field with convergent energy.
//!
//! The crate is `no_std` with `alloc`. The default `std` feature only switches the
//! node loops to rayon; the arithmetic and the summation order are the same
//! either way, so results are bit-identical with and without it.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod exponents;
pub mod functionals;
pub mod gap;
pub mod geometry;
pub mod grid;
pub mod kernel;
pub mod quadrature;
pub mod verification;
pub mod weight;

mod math;
mod par;

pub use error::{Error, Result};
pub use exponents::ExponentSet;
pub use functionals::EnergyBreakdown;
pub use gap::{GapVerdict, Regime};
pub use geometry::Cylinder;
pub use grid::{GridField, VectorField, Window};
pub use kernel::{MollifierKernel, SpatialProfile};
pub use weight::{Weight, WeightForm};
