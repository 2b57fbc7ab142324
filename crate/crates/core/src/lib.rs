//! Open quantum walks derived from a microscopic system–bath model.
//!
//! The crate builds the coin (transition) operators of a discrete-time open
//! quantum walk on a two-node graph from node Hamiltonians, a coupling
//! operator and a thermal bath, runs the walk, and integrates the
//! corresponding continuous-time block master equation for comparison.

pub mod derivation;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lindblad;
pub mod state;
pub mod trajectory;
pub mod walk;

pub use error::{Error, Result};
