//! Channel model and optimizers for links aided by a flexible intelligent
//! metasurface (FIM): a surface whose elements shift the phase of the
//! passing wave and can also be displaced perpendicular to the surface.
//!
//! * [`channel`] builds steering vectors and cascaded channels for a given
//!   surface shape.
//! * [`gain`] evaluates channel gains, the co-phasing profile and the
//!   per-element gain `z_n(d_n)`.
//! * [`optimizers`] solves the per-element deformation problems (particle
//!   swarm, multi-interval gradient ascent, grid search).
//! * [`miso`] adds MRT beamforming and the alternating optimizer.
//! * [`experiments`] samples scenarios and runs the Monte Carlo campaigns.

pub mod channel;
pub mod error;
pub mod experiments;
pub mod gain;
pub mod miso;
pub mod optimizers;

pub use error::{FimError, Result};
