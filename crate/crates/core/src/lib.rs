//! Toolkit for one-dimensional PT-symmetric non-unitary discrete-time
//! quantum walks: momentum-space bands and PT phases, topological invariants
//! from the global Berry phase, real-space dynamics on a ring and
//! topological edge states.

pub mod bloch;
pub mod edge;
pub mod error;
pub mod numerics;
pub mod realspace;
pub mod topology;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
