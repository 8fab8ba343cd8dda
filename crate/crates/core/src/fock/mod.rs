//! Few-photon states over labeled path x polarization modes: sparse
//! occupation-vector superpositions, mode-subset unitaries, post-selection,
//! and branch dephasing.

mod ensemble;
mod registry;
mod state;
mod transform;

pub use ensemble::{dephase_branches, PhotonicEnsemble, WEIGHT_TOL};
pub use registry::{ModeLabel, ModeRegistry, Polarization};
pub use state::{DetectionPattern, Occupation, PhotonicState, AMPLITUDE_TOL, NORM_TOL};
pub use transform::{unitarity_deviation, ElementTransform, UNITARITY_TOL};
