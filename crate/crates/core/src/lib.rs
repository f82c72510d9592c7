//! Ghost-force-free atomistic-to-continuum coupling on periodic lattices.
//!
//! The crate provides the exact atomistic energy, the tetrahedral and cell
//! atomistic Cauchy–Born (A-CB) energies, and three coupled energies built
//! from bond volumes: a conforming one, a discontinuous (DG-type) one and a
//! high-order finite element one. Every energy comes with its exact first
//! variation.

pub mod assembly;
pub mod coupling;
pub mod energies;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod potentials;

pub use assembly::Reduction;
pub use energies::{EnergyReport, ModelKind};
pub use error::{Error, Result};
