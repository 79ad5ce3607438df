//! Process-matrix analysis of single-qubit noise under quantum error
//! correction.

pub mod error;
pub mod linalg;
pub mod metrics;
pub mod analysis;
pub mod approximator;
pub mod channels;
pub mod cli;
pub mod pauli;
pub mod qec;
pub mod qp;
pub mod sdp;
pub mod state;

pub use error::{Error, Result};
pub use linalg::{tensor, ComplexMatrix, C64};
pub use pauli::{pauli_basis, Pauli, PauliString};
pub use state::{bloch_of, density_of, fibonacci_sphere, BlochVector, DensityMatrix, PureState};
