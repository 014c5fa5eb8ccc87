//! Moment operators of the Cartesian margins of phase-space observables
//! generated by number states and their mixtures, in a truncated Fock space.

pub mod error;
pub mod export;
pub mod fock_space;
pub mod hermite_quad;
pub mod moment_engine;
pub mod phase_density;
pub mod quantizer;
pub mod verify_oracle;
pub mod weights;

pub use error::{Error, Result};
