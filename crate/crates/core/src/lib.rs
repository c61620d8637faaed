//! Simulation of a short-range hydrodynamic link between an oscillating
//! sphere (a potential-flow dipole) and an artificial lateral-line pressure
//! array.
//!
//! The chain is: BPSK drive ([`modem`]) → dipole pressure channel
//! ([`physics`]) → multi-sensor reception with turbulence noise ([`array`])
//! → spatial matched filter ([`beamformer`]) → integrate-and-dump decision
//! ([`modem`]). [`analysis`] ties the stages together for end-to-end runs,
//! Monte-Carlo BER sweeps, eye diagrams, attenuation profiles and the
//! volumetric sensitivity field.

pub mod analysis;
pub mod array;
pub mod beamformer;
mod error;
pub mod geometry;
pub mod io;
pub mod modem;
pub mod physics;
pub mod rng;
pub mod scenario;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use geometry::Vec3;
