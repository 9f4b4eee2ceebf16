//! Dark-state dynamics and dissipative entanglement of a two-component
//! Bose-Einstein condensate in a double well, coupled to a single lossy
//! resonator mode.
//!
//! Modules, bottom-up:
//!
//! * [`fock`]: mode layouts, sparse ladder operators, dense states and
//!   excitation-sector restriction;
//! * [`models`]: bosonized strong/weak-tunneling Hamiltonians and exact
//!   collective-spin Hamiltonians;
//! * [`lindblad`]: master-equation integration, diagnostics and steady states;
//! * [`entanglement`]: partial trace, von Neumann entropy, logarithmic
//!   negativity and the number-operator witness;
//! * [`darkstates`]: the dark-state families and the analytic steady mixture;
//! * [`squeezing`]: the exactly solvable quadratic asymmetric-mode model;
//! * [`cli`]: experiment configs, figure presets, sweeps and CSV output.

pub mod cli;
pub mod darkstates;
pub mod entanglement;
pub mod error;
pub mod fock;
pub mod lindblad;
pub mod models;
pub mod squeezing;

pub use error::{Error, Result};
