//! Few-photon linear-optical simulation of a post-selected quantum Fredkin
//! (controlled-SWAP) gate.
//!
//! Two photon-pair sources drive a three-interferometer circuit in which the
//! control photon's polarization selects, through path entanglement, whether
//! the two target qubits are exchanged. The crate simulates the gate end to
//! end at the Fock level:
//!
//! * [`fock`] — sparse occupation-vector states over labeled path x
//!   polarization modes, mode-subset unitaries, post-selection, branch
//!   dephasing;
//! * [`optics`] — Jones matrices and beam-splitter/displacer elements;
//! * [`circuit`] — the assembled gate: sources, encoding, SWAP wiring,
//!   trigger, phase calibration, success accounting and heralded-variant
//!   resource reports;
//! * [`measurement`] — projective polarization measurements and seeded count
//!   sampling;
//! * [`tomography`] — iterative maximum-likelihood state reconstruction with
//!   Monte-Carlo error bars;
//! * [`analysis`] — truth tables, three-particle correlation statistics,
//!   overlap/purity fringes and mixed-state aggregation.
//!
//! All simulation state is immutable after construction and the only
//! randomness is explicit, seeded count sampling, so every pipeline is
//! reproducible bit for bit.

pub mod analysis;
pub mod circuit;
pub mod error;
pub mod fock;
pub mod logical;
pub mod measurement;
pub mod optics;
pub mod tomography;

pub use error::{Error, Result};
