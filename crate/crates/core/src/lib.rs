//! Exact simulation of a Rydberg-atom ruby array prepared into a dimer
//! (toric-code-like) spin liquid: geometry, blockade-constrained Hilbert
//! spaces, Hamiltonians, time evolution, loop observables and dimer
//! coverings.

pub mod dimer;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod hilbert;
pub mod lattice;
pub mod measure;

pub use error::{Error, Result};
