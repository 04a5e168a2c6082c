//! Number-conserving bosonic Fock basis and its dihedral symmetry actions.

mod eigen;
mod operators;
mod symmetry;

pub use eigen::{diagonalize_sector, SectorEigensystem, SpectralDecomposition};
pub use operators::{
    build_hamiltonian, build_imbalance_operator, build_number_operator, imbalance_weight,
    OperatorMatrix,
};
pub use symmetry::{
    build_sector_basis, project_to_sector, project_transfer, project_transfer_sparse,
    reflection_operator, rotation_invariance_defect, MomentumSectorBasis, OrbitTable,
};

use crate::{CoreError, ModelParams, Result};
use std::collections::HashMap;

/// Ceiling on basis sizes built without an explicit capacity override.
pub const DEFAULT_MAX_DIM: usize = 4_000_000;

/// Occupation-number configuration of N bosons on the ring.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FockState {
    occ: Vec<u32>,
}

impl FockState {
    pub fn new(occ: Vec<u32>) -> Self {
        Self { occ }
    }

    pub fn occupations(&self) -> &[u32] {
        &self.occ
    }

    pub fn total(&self) -> u32 {
        self.occ.iter().sum()
    }

    /// Cyclic shift (n_1,...,n_S) -> (n_S, n_1,...,n_{S-1}).
    pub fn rotated(&self) -> FockState {
        let s = self.occ.len();
        let mut occ = Vec::with_capacity(s);
        occ.push(self.occ[s - 1]);
        occ.extend_from_slice(&self.occ[..s - 1]);
        FockState { occ }
    }

    /// Site-order reversal (n_1,...,n_S) -> (n_S,...,n_1).
    pub fn reflected(&self) -> FockState {
        let mut occ = self.occ.clone();
        occ.reverse();
        FockState { occ }
    }
}

/// Cyclic shift by one site; `R` applied `n_sites` times is the identity.
pub fn apply_rotation(state: &FockState) -> FockState {
    state.rotated()
}

/// Z2 reflection; squares to the identity and does not commute with `R`.
pub fn apply_reflection(state: &FockState) -> FockState {
    state.reflected()
}

/// Number of Fock configurations, C(N + S - 1, S - 1), or `None` on overflow.
pub fn basis_dimension(n_sites: usize, n_particles: usize) -> Option<usize> {
    // C(n+k, k) with n = n_particles, k = n_sites - 1
    let k = n_sites - 1;
    let n = n_particles;
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc.checked_mul((n + i) as u128)?;
        acc /= i as u128;
    }
    usize::try_from(acc).ok()
}

/// Ordered Fock basis with an exact inverse map.
///
/// States are listed in descending lexicographic order of the occupation
/// vector, so `(N, 0, ..., 0)` comes first and `(0, ..., 0, N)` last.
#[derive(Debug, Clone)]
pub struct FockBasis {
    n_sites: usize,
    n_particles: usize,
    states: Vec<FockState>,
    index: HashMap<Vec<u32>, usize>,
}

impl FockBasis {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn state(&self, i: usize) -> &FockState {
        &self.states[i]
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn index_of(&self, state: &FockState) -> Option<usize> {
        self.index.get(state.occupations()).copied()
    }
}

/// Enumerates the basis under the default capacity ceiling.
pub fn enumerate_basis(params: &ModelParams) -> Result<FockBasis> {
    enumerate_basis_capped(params, DEFAULT_MAX_DIM)
}

/// Enumerates the basis, erroring if the dimension exceeds `max_dim`.
pub fn enumerate_basis_capped(params: &ModelParams, max_dim: usize) -> Result<FockBasis> {
    let dim = basis_dimension(params.n_sites, params.n_particles).ok_or(CoreError::Capacity {
        dim: usize::MAX,
        max: max_dim,
    })?;
    if dim > max_dim {
        return Err(CoreError::Capacity { dim, max: max_dim });
    }

    let mut states = Vec::with_capacity(dim);
    let mut current = vec![0u32; params.n_sites];
    fill_descending(&mut current, 0, params.n_particles as u32, &mut states);
    debug_assert_eq!(states.len(), dim);

    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.occ.clone(), i))
        .collect();

    Ok(FockBasis {
        n_sites: params.n_sites,
        n_particles: params.n_particles,
        states,
        index,
    })
}

fn fill_descending(current: &mut Vec<u32>, site: usize, remaining: u32, out: &mut Vec<FockState>) {
    if site == current.len() - 1 {
        current[site] = remaining;
        out.push(FockState::new(current.clone()));
        return;
    }
    for n in (0..=remaining).rev() {
        current[site] = n;
        fill_descending(current, site + 1, remaining - n, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n_sites: usize, n: usize) -> ModelParams {
        ModelParams::new(n_sites, n, 1.0, -10.0).unwrap()
    }

    #[test]
    fn single_particle_has_one_state_per_site() {
        let basis = enumerate_basis(&params(4, 1)).unwrap();
        assert_eq!(basis.dim(), 4);
    }

    #[test]
    fn stars_and_bars_count_at_n55() {
        let basis = enumerate_basis(&params(4, 55)).unwrap();
        assert_eq!(basis.dim(), 30_856);
    }

    #[test]
    fn two_site_ordering_is_descending_lexicographic() {
        let basis = enumerate_basis(&params(2, 3)).unwrap();
        let occs: Vec<&[u32]> = basis.states().iter().map(|s| s.occupations()).collect();
        assert_eq!(occs, vec![&[3, 0][..], &[2, 1], &[1, 2], &[0, 3]]);
    }

    #[test]
    fn index_map_is_exact_inverse() {
        let basis = enumerate_basis(&params(4, 6)).unwrap();
        for (j, s) in basis.states().iter().enumerate() {
            assert_eq!(basis.index_of(s), Some(j));
        }
    }

    #[test]
    fn capacity_limit_is_enforced() {
        let err = enumerate_basis_capped(&params(4, 55), 1000).unwrap_err();
        assert!(matches!(err, CoreError::Capacity { dim: 30_856, .. }));
    }

    #[test]
    fn rotation_and_reflection_actions() {
        let s = FockState::new(vec![1, 2, 3, 4]);
        assert_eq!(apply_rotation(&s).occupations(), &[4, 1, 2, 3]);
        assert_eq!(apply_reflection(&s).occupations(), &[4, 3, 2, 1]);

        let mut r = s.clone();
        for _ in 0..4 {
            r = apply_rotation(&r);
        }
        assert_eq!(r, s);
        assert_eq!(apply_reflection(&apply_reflection(&s)), s);

        // R and S do not commute in general
        let rs = apply_rotation(&apply_reflection(&s));
        let sr = apply_reflection(&apply_rotation(&s));
        assert_ne!(rs, sr);
    }
}
