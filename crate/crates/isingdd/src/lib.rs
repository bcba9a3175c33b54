//! Dynamically corrected gates on bipartite Ising qubit networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`pulse`]: shaped pulses in a `1 - cos` Fourier basis, their Magnus
//!   coefficients and a search for self-refocusing shapes.
//! * [`network`]: bipartite coupling graphs, chemical-shift disorder and the
//!   dense Hamiltonian.
//! * [`propagator`]: fixed-step RK4 propagation, hard pulses and numerical
//!   average Hamiltonians.
//! * [`avgham`]: closed-form average Hamiltonians of single pulses and DCG
//!   sequences.
//! * [`sequences`]: schedules for DCG rotations, the ZZ sequence and
//!   composite gates.
//! * [`analysis`]: fidelity, Pauli weight spectra, disorder sweeps and slopes.
//! * [`scaling`]: cluster counting and the large-lattice error budget.
//!
//! Units: the nominal pulse length is 1, energies are in units of its inverse.

pub mod analysis;
pub mod avgham;
mod error;
pub mod linalg;
pub mod network;
pub mod propagator;
pub mod pulse;
pub mod scaling;
pub mod sequences;

pub use error::{Error, Result};
pub use linalg::{Axis, CMat, C64};
