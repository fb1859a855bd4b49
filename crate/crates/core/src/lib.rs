//! Wigner-function dynamics on a periodic phase-space grid.
//!
//! The crate evolves quasi-probability distributions under quantum (Moyal),
//! classical (Liouville) and diffusive dynamics with a split-operator spectral
//! scheme, and provides the diagnostics and closed-form estimators used to
//! study quantum-classical correspondence in chaotic systems.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod field;
pub mod grid;
pub mod io;
pub mod ode;
pub mod potentials;
pub mod propagators;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{make_state, InitialStateSpec, Moments, WignerField};
pub use grid::{make_grid, GridConfig, PhaseSpaceGrid};
pub use potentials::{Bracket, PotentialModel};
pub use propagators::{evolve, evolve_paired, Environment, EvolutionSpec, Observers, Propagator};
