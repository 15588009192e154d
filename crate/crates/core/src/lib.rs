//! Qutrit-assisted generalized Toffoli compilation for trapped-ion hardware.
//!
//! The crate is organised as a small compiler plus the simulator used to
//! check it:
//!
//! - [`sim`]: dense and sparse state vectors over `3^n` amplitudes, exact
//!   unitaries for small registers, and the brute-force `C^{n-1}X` oracle.
//! - [`gates`]: the native gate set (`R^{0j}_phi`, `R^j_z`, `XX`, `XX~`),
//!   SK1 composite pulses, the circuit IR and the global-control legality
//!   checker.
//! - [`decomposer`]: circuit builders (qutrit Toffoli with `2N-3` XX gates,
//!   qubit baselines, XX~ phase correction, Ramsey calibration, Grover).
//! - [`noise`]: error channels and the Monte-Carlo trajectory engine.
//! - [`readout`]: shelving readout models, confusion matrices, SPAM
//!   correction and post-selection.
//! - [`analysis`]: truth-table fidelity, leakage and Ramsey fits, Grover
//!   error and bootstrap uncertainties.

pub mod analysis;
pub mod decomposer;
pub mod error;
pub mod gates;
pub mod noise;
pub mod readout;
pub mod sim;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
