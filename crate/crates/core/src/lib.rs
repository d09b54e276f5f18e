//! Lattice white-noise functional calculus and momentum-space propagators
//! for a charged particle on a ring around an excluded magnetic flux
//! (bound-state Aharonov-Bohm system).

pub mod ab_model;
pub mod dense;
pub mod error;
pub mod gaussian;
pub mod lattice;
pub mod perturbation;
pub mod propagators;
pub mod schrodinger;
pub mod verify;

pub use error::{Error, Result};
