//! Multipartite entanglement witnesses with bounds corrected for imprecise measurements.
//!
//! Qubit 1 is the most significant tensor factor throughout. Imprecision eps enters
//! every observable through q = 1 - 2 eps.

pub mod error;
pub mod fidelity;
pub mod inm;
pub mod io;
pub mod linalg;
pub mod bounds;
pub mod measurement;
pub mod optimize;
pub mod poisson;
pub mod robustness;
pub mod states;
pub mod tol;
pub mod tomography;
pub mod verify;
pub mod waveplate;
pub mod witness;

pub use error::{GmeError, Result};
