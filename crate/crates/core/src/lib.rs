//! Asymptotic critical values of polynomials through Newton polyhedra and
//! toric charts: bad faces, candidate values, and verified witness curves.

pub mod chart;
pub mod critical;
pub mod curve;
pub mod error;
pub mod io;
pub mod lattice;
pub mod laurent;
pub mod mp;
pub mod newton;
pub mod pipeline;
pub mod polyhedra;
pub mod verify;
#[cfg(test)]
mod test_polys;

pub use error::{Error, Result};
