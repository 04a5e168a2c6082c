//! Coherent-state quenches, eigenbasis evolution and the quasi-degenerate
//! quadruplet analysis of the generalized imbalance.

mod coherent;
mod evolve;
mod quadruplet;

pub use coherent::{build_coherent_state, CoherentState};
pub use evolve::{
    decompose_in_eigenbasis, diagonal_ensemble, evolve_observables, ldos, EigenbasisAmplitudes,
    LdosHistogram, ObservableSeries,
};
pub use quadruplet::{
    build_quadruplet_blocks, nonzero_fraction, quadruplet_eigenvalues, QuadrupletBlock,
    QuadrupletSet,
};
