//! Pseudo-spectral simulation of the stochastic mixed Cahn-Hilliard /
//! conserved Allen-Cahn equation with logarithmic potential and
//! conservative multiplicative noise on the flat torus.

pub mod config;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod noise;
pub mod operators;
pub mod potential;
pub mod sampling;
pub mod snapshot;
pub mod solver;

pub use error::{Error, Result};
