//! Numerical core for the prescribed Webster scalar curvature problem on the
//! standard CR sphere S³ ⊂ C².
//!
//! The crate is `no_std` (it needs `alloc`). It covers the Heisenberg group
//! model and its Cayley chart ([`heisenberg`]), curvature candidates and their
//! critical points on the sphere ([`sphere`]), the bubble family and the energy
//! expansion ([`bubbles`]), the interaction-matrix index criterion
//! ([`criterion`]) and the linearized dynamics near infinity ([`flow`]).
//!
//! All conventions that carry a normalization (the sublaplacian sign, the
//! volume of the contact form, the Cayley conformal factor, the bubble
//! constant and the Green normalization) are fixed once by [`Calibration`]
//! and threaded through every computation that depends on them.
#![no_std]

extern crate alloc;
#[cfg(test)]
#[macro_use]
extern crate std;

pub mod bubbles;
pub mod calibration;
pub mod criterion;
pub mod eigen;
mod error;
pub mod expr;
pub mod flow;
pub mod heisenberg;
pub mod quadrature;
pub mod scalar;
pub mod sphere;

pub use calibration::Calibration;
pub use error::{Error, Result};
pub use heisenberg::HPoint;
pub use scalar::{Jet, Scalar};
pub use sphere::SpherePoint;
