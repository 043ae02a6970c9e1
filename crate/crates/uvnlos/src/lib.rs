//! Path-loss modeling for ultraviolet non-line-of-sight links with a cuboid
//! obstacle.
//!
//! The received pulse energy has two parts: single atmospheric scattering
//! inside the beam/FoV overlap volume (with a blockage weighting factor for
//! the obstacle) and Phong-model reflection off the obstacle facade facing
//! the link. Both are evaluated by Gauss-Legendre cubature; a Monte-Carlo
//! photon tracer with next-event estimation serves as the validation oracle.

pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod mcpt;
pub mod quad;
pub mod reflection;
pub mod scattering;
pub mod vec3;

pub use error::{Error, Result};
