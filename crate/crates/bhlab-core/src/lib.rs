//! Numerical laboratory for the fully-connected N-site Bose-Hubbard ring.
//!
//! The crate covers four layers of the problem:
//!
//! * [`fock`] — number-conserving Fock basis, Hamiltonian and observable
//!   operators, dihedral symmetry actions and the momentum-sector block
//!   decomposition with a dense Hermitian eigensolver front-end.
//! * [`classical`] — the mean-field limit on the constraint sphere:
//!   energy functional, Hamilton flow, adaptive high-order integration,
//!   Lyapunov exponents via tangent dynamics, energy-shell sampling and
//!   stationary-point location by a gauge-fixed Newton method.
//! * [`spectra`] — spectral statistics: polynomial unfolding, nearest
//!   neighbor spacings, the Berry-Robnik mixed distribution and
//!   regularity-parameter fits over sliding energy windows.
//! * [`quantum`] / [`twa`] — coherent-state quenches, LDOS, exact time
//!   evolution in the eigenbasis, diagonal ensembles, quasi-degenerate
//!   quadruplet blocks of the generalized imbalance, and truncated-Wigner
//!   classical clouds with error-bar propagation.
//!
//! Energies are reported on the intensive scale `eps = E / N` throughout,
//! and `hbar = 1`.

pub mod classical;
mod error;
pub mod fock;
mod params;
pub mod quantum;
pub mod spectra;
pub mod twa;

pub use error::{CoreError, Result};
pub use params::ModelParams;
