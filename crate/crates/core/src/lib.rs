//! Simulation and estimation of magnetic nanoparticle relaxation under a
//! sinusoidal drive field with an orthogonal DC bias.

pub mod coilfield;
pub mod error;
pub mod io;
pub mod physics;
pub mod relaxation;
pub mod selftest;
pub mod spectral;
pub mod sweep;
pub mod taurus;
pub mod trace;

pub use error::{Error, Result};
pub use trace::SignalTrace;
