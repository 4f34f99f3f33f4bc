//! qoplab — a numerical laboratory for entanglement-based quantum
//! communication and computation primitives.
//!
//! The crate is organized around a dense state engine ([`qstate`]) plus one
//! module per physical platform or protocol family:
//!
//! - [`entanglement`]: Schmidt analysis, entanglement detection, canonical
//!   entangled states, random-unitary twirling.
//! - [`protocols`]: qubit teleportation, two-pair entanglement purification,
//!   and simple error-correction benchmarks.
//! - [`iontrap`]: trapped-ion carrier/sideband pulses, the phonon-mediated
//!   two-ion phase gate, and the Coulomb push gate.
//! - [`neutral`]: cold-collision and dipole-blockade phase gates for neutral
//!   atoms.
//! - [`cavity`]: photon-mediated state transfer between two cavity nodes.
//! - [`repeater`]: atomic-ensemble entanglement generation, swapping, and
//!   nested repeater timing.
//! - [`memory`]: impedance-matched storage and retrieval of light modes.
//! - [`cv`]: Gaussian continuous-variable entanglement and teleportation.
//!
//! Closed-form protocol maps are generic over a scalar type so tests can run
//! them over exact rationals; `f64` aliases are re-exported at the crate root.

pub mod acceptance;
pub mod cavity;
pub mod consts;
pub mod cv;
pub mod entanglement;
pub mod error;
pub mod iontrap;
pub mod memory;
pub mod neutral;
pub mod ode;
pub mod protocols;
pub mod pulse;
pub mod qstate;
pub mod qubit;
pub mod repeater;

pub use error::{QopError, Result};
pub use qstate::{CMatrix, CVector, DensityOp, HilbertSpec, Ket, Operator, C64};
