//! Exact thermodynamics and teleportation metrics of the spin-1/2
//! Ising-Heisenberg trimer chain.
//!
//! Each Heisenberg dimer of the chain is used as a two-qubit resource. The
//! crate computes its reduced density matrix in the thermodynamic limit by
//! the transfer-matrix method, derives concurrence and teleportation
//! fidelities from it, and ships brute-force oracles (finite-chain exact
//! diagonalization, Kraus sums, Uhlmann fidelity, quadrature) to check every
//! closed form.
//!
//! ```
//! use trimer_core::channel::{channel_concurrence, channel_density_matrix};
//! use trimer_core::model::{CouplingSet, Thermo};
//! use trimer_core::teleport::average_fidelity;
//!
//! let c = CouplingSet::new(1.0, 1.0, 1.0).unwrap();
//! let rho = channel_density_matrix(&c, &Thermo::from_temperature(0.01).unwrap()).unwrap();
//! assert!(channel_concurrence(&rho) > 0.999);
//! assert!(average_fidelity(&rho) > 0.999);
//! ```

pub mod channel;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod scan;
pub mod teleport;
pub mod transfer;
pub mod verify;
pub mod xstate;

pub use error::{Error, Result};
