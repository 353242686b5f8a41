//! Simulation of electrically driven nuclear-spin qubits in TbPc₂
//! single-molecule magnets.
//!
//! The crate is layered bottom-up:
//!
//! * [`linalg`] and [`spin`]: dense Hermitian kernel and angular-momentum matrices.
//! * [`smm`]: single-molecule Hamiltonian, level diagram, hyperfine Stark model.
//! * [`dynamics`]: time-dependent propagation and Rabi simulations.
//! * [`cavity`]: two molecules coupled through a resonator mode.
//! * [`swipht`]: analytic SWIPHT pulse synthesis.
//! * [`gates`]: CNOT simulation, gate fidelity and parameter sweeps.
//!
//! Public interfaces use linear frequencies (MHz, GHz), Tesla and
//! microseconds. Propagation works in angular units (rad/μs).

pub mod cavity;
pub mod dynamics;
pub mod error;
pub mod format;
pub mod gates;
pub mod linalg;
pub mod smm;
pub mod spin;
pub mod swipht;

pub use error::{Error, Result};
