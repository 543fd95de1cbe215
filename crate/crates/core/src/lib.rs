//! Pseudo-spectral simulation of a pressureless particle phase coupled by
//! drag to an isentropic compressible Navier–Stokes fluid on the periodic
//! torus, with diagnostics for its conservation laws, energy identities and
//! large-time decay, and a particle reference solver for the mono-kinetic
//! closure.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod init;
pub mod integrator;
pub mod kinetic;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{GridSpec, RealField, VectorField};
