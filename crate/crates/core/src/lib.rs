//! Simulation and data reduction for a postselection-free minimum-disturbance
//! measurement (MDM) on a single-photon polarization qubit, using the photon's
//! path as the measurement ancilla.
//!
//! The crate is layered bottom-up:
//!
//! * [`qcore`]: pure states, density operators, fidelity, partial trace, and
//!   the six polarization test states.
//! * [`circuit`]: the abstract protocol (CNOT, the Hadamard-like gate `H'`,
//!   ancilla readout and `σz` feed-forward).
//! * [`fidelity`]: estimation/operation fidelities, their closed-form averages
//!   and the optimal trade-off bound.
//! * [`bench`]: a Jones-calculus model of the interferometric apparatus.
//! * [`montecarlo`]: shot-by-shot simulation producing photon-count tables.
//! * [`datared`]: reduction of count tables to fidelity points.

pub mod bench;
pub mod circuit;
pub mod datared;
pub mod error;
pub mod fidelity;
pub mod fixtures;
pub mod montecarlo;
pub mod qcore;
pub mod rng;

pub use error::{Error, Result};
