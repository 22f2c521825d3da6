//! Cocycle computations for shift semigroups on discretized P-spaces and the
//! twisted CCR product systems they define.

pub mod admissibility;
pub mod classify;
pub mod cocycle;
pub mod cone;
pub mod error;
pub mod fock;
pub mod grid;
pub mod lsq;
pub mod pspace;
pub mod reports;
pub mod shift;

pub use cone::{sample_triples, Cone, LatticePoint, LatticeSample, Triple};
pub use error::{Error, Result};
pub use grid::GridVector;
pub use num_complex::Complex64 as C64;
pub use pspace::{ModelSpec, PSpaceModel};
pub use shift::ShiftRep;
