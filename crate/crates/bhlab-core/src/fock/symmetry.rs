//! Cyclic-shift orbits and momentum-sector (Bloch) bases.
//!
//! Sector convention: with `R|n_1,...,n_S> = |n_S,n_1,...,n_{S-1}>` and
//! `w = exp(2 pi i / S)`, the normalized sector-`k` state built on an orbit
//! representative `|s>` of period `d` is
//!
//! ```text
//! |k, s> = (sqrt(d)/S) * sum_{j=0}^{S-1} w^{k j} R^j |s>
//!        = (1/sqrt(d)) * sum_{j=0}^{d-1} w^{k j} R^j |s>
//! ```
//!
//! which is nonzero iff `k d = 0 (mod S)`. Under this convention
//! `R |k,s> = w^{-k} |k,s>`, and the intensive imbalance transfers one unit
//! of momentum upward: `<k'| I |k>` vanishes unless `k' = k + 1 (mod S)`.

use super::operators::OperatorMatrix;
use super::FockBasis;
use crate::{CoreError, Result};
use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// One cyclic-shift orbit of Fock states.
#[derive(Debug, Clone)]
pub struct Orbit {
    /// Fock index of the representative (lexicographically smallest member).
    pub rep: usize,
    /// Orbit period `d`: smallest positive shift with `R^d |rep> = |rep>`.
    pub period: usize,
    /// Fock indices of `R^j |rep>` for `j = 0..period`.
    pub members: Vec<usize>,
}

/// Index maps for the dihedral actions on a fixed basis.
#[derive(Debug, Clone)]
pub struct OrbitTable {
    orbits: Vec<Orbit>,
    orbit_of: Vec<usize>,
    shift_of: Vec<u32>,
    rotated: Vec<usize>,
    reflected: Vec<usize>,
}

impl OrbitTable {
    pub fn build(basis: &FockBasis) -> Self {
        let dim = basis.dim();
        let rotated: Vec<usize> = (0..dim)
            .map(|i| basis.index_of(&basis.state(i).rotated()).unwrap())
            .collect();
        let reflected: Vec<usize> = (0..dim)
            .map(|i| basis.index_of(&basis.state(i).reflected()).unwrap())
            .collect();

        let mut orbit_of = vec![usize::MAX; dim];
        let mut shift_of = vec![0u32; dim];
        let mut orbits = Vec::new();

        for start in 0..dim {
            if orbit_of[start] != usize::MAX {
                continue;
            }
            let mut cycle = vec![start];
            let mut j = rotated[start];
            while j != start {
                cycle.push(j);
                j = rotated[j];
            }
            // representative = lexicographically smallest occupation vector
            let rep_pos = (0..cycle.len())
                .min_by(|&a, &b| {
                    basis
                        .state(cycle[a])
                        .occupations()
                        .cmp(basis.state(cycle[b]).occupations())
                })
                .unwrap();
            let members: Vec<usize> = (0..cycle.len())
                .map(|j| cycle[(rep_pos + j) % cycle.len()])
                .collect();
            let id = orbits.len();
            for (j, &f) in members.iter().enumerate() {
                orbit_of[f] = id;
                shift_of[f] = j as u32;
            }
            orbits.push(Orbit {
                rep: members[0],
                period: members.len(),
                members,
            });
        }

        Self {
            orbits,
            orbit_of,
            shift_of,
            rotated,
            reflected,
        }
    }

    pub fn orbits(&self) -> &[Orbit] {
        &self.orbits
    }

    pub fn orbit_of(&self, fock_index: usize) -> usize {
        self.orbit_of[fock_index]
    }

    /// Shift `j` with `|fock_index> = R^j |rep>`.
    pub fn shift_of(&self, fock_index: usize) -> usize {
        self.shift_of[fock_index] as usize
    }

    pub fn rotated_index(&self, fock_index: usize) -> usize {
        self.rotated[fock_index]
    }

    pub fn reflected_index(&self, fock_index: usize) -> usize {
        self.reflected[fock_index]
    }
}

/// Basis of one rotation-quantum-number block.
#[derive(Debug, Clone)]
pub struct MomentumSectorBasis {
    pub k_index: usize,
    n_sites: usize,
    /// Orbit ids whose period is compatible with this sector, in orbit order.
    members: Vec<usize>,
    row_of_orbit: Vec<Option<usize>>,
}

impl MomentumSectorBasis {
    pub fn dim(&self) -> usize {
        self.members.len()
    }

    pub fn member_orbits(&self) -> &[usize] {
        &self.members
    }

    pub fn row_of_orbit(&self, orbit: usize) -> Option<usize> {
        self.row_of_orbit[orbit]
    }

    /// Human-readable statement of the Bloch normalization, for run metadata.
    pub fn norm_convention(&self) -> String {
        format!(
            "|k,s> = (sqrt(d)/{S}) sum_j exp(2 pi i {k} j/{S}) R^j |s>, \
             one representative per cyclic orbit, kept iff k*d = 0 mod {S}",
            S = self.n_sites,
            k = self.k_index
        )
    }
}

/// Selects the orbits compatible with sector `k`: period `d` enters iff
/// `k d = 0 (mod S)`.
pub fn build_sector_basis(
    basis: &FockBasis,
    table: &OrbitTable,
    k_index: usize,
) -> MomentumSectorBasis {
    let n_sites = basis.n_sites();
    assert!(k_index < n_sites, "sector index out of range");
    let mut members = Vec::new();
    let mut row_of_orbit = vec![None; table.orbits().len()];
    for (id, orbit) in table.orbits().iter().enumerate() {
        if (k_index * orbit.period) % n_sites == 0 {
            row_of_orbit[id] = Some(members.len());
            members.push(id);
        }
    }
    MomentumSectorBasis {
        k_index,
        n_sites,
        members,
        row_of_orbit,
    }
}

/// Largest deviation of `O` from rotation invariance, `max |O_{r,c} -
/// O_{Rr,Rc}|`, relative to the largest entry modulus.
pub fn rotation_invariance_defect(op: &OperatorMatrix, table: &OrbitTable) -> f64 {
    let scale = op.max_entry_norm();
    if scale == 0.0 {
        return 0.0;
    }
    let mut defect = 0.0f64;
    for r in 0..op.dim() {
        let rr = table.rotated_index(r);
        for &(c, v) in op.row(r) {
            let d = (v - op.get(rr, table.rotated_index(c))).norm();
            defect = defect.max(d);
        }
    }
    defect / scale
}

fn column_storage(op: &OperatorMatrix) -> Vec<Vec<(usize, Complex64)>> {
    let mut cols: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); op.dim()];
    for r in 0..op.dim() {
        for &(c, v) in op.row(r) {
            cols[c].push((r, v));
        }
    }
    cols
}

/// Projects a rotation-invariant operator onto one momentum sector.
///
/// Fails if the operator does not commute with `R` to within `1e-12`
/// relative; use [`project_transfer`] for momentum-carrying operators.
pub fn project_to_sector(
    op: &OperatorMatrix,
    table: &OrbitTable,
    sector: &MomentumSectorBasis,
) -> Result<Array2<Complex64>> {
    let defect = rotation_invariance_defect(op, table);
    if defect > 1e-12 {
        return Err(CoreError::NotRotationInvariant(defect));
    }
    Ok(project_transfer(op, table, sector, sector))
}

/// Block `<to| O |from>` between two momentum sectors of the same basis.
/// No commutation requirement; the result is identically zero whenever the
/// operator cannot bridge the two momenta.
pub fn project_transfer(
    op: &OperatorMatrix,
    table: &OrbitTable,
    from: &MomentumSectorBasis,
    to: &MomentumSectorBasis,
) -> Array2<Complex64> {
    let mut block = Array2::zeros((to.dim(), from.dim()));
    project_transfer_into(op, table, from, to, |row, col, v| block[(row, col)] = v);
    block
}

/// Sparse triplets of `<to| O |from>`, skipping exact structural zeros.
pub fn project_transfer_sparse(
    op: &OperatorMatrix,
    table: &OrbitTable,
    from: &MomentumSectorBasis,
    to: &MomentumSectorBasis,
) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    project_transfer_into(op, table, from, to, |row, col, v| {
        if v != Complex64::default() {
            out.push((row, col, v));
        }
    });
    out
}

fn project_transfer_into(
    op: &OperatorMatrix,
    table: &OrbitTable,
    from: &MomentumSectorBasis,
    to: &MomentumSectorBasis,
    mut emit: impl FnMut(usize, usize, Complex64),
) {
    let dim = op.dim();
    let n_sites = from.n_sites as f64;
    let cols = column_storage(op);

    let mut amp = vec![Complex64::default(); dim];
    let mut seen = vec![false; dim];
    let mut touched: Vec<usize> = Vec::new();
    let mut row_acc = vec![Complex64::default(); to.dim()];
    let mut row_seen = vec![false; to.dim()];
    let mut rows_touched: Vec<usize> = Vec::new();

    for (col_idx, &orbit_id) in from.member_orbits().iter().enumerate() {
        let orbit = &table.orbits()[orbit_id];
        let ket_norm = 1.0 / (orbit.period as f64).sqrt();

        // scatter O |k, s> into the Fock basis
        for (j, &f) in orbit.members.iter().enumerate() {
            let coeff = Complex64::from_polar(
                ket_norm,
                TAU * (from.k_index * j) as f64 / n_sites,
            );
            for &(f2, v) in &cols[f] {
                if !seen[f2] {
                    seen[f2] = true;
                    touched.push(f2);
                }
                amp[f2] += coeff * v;
            }
        }

        // gather against the bra sector states, accumulating every orbit
        // member into its sector row
        for &f2 in &touched {
            let o2 = table.orbit_of(f2);
            if let Some(row_idx) = to.row_of_orbit(o2) {
                let d2 = table.orbits()[o2].period as f64;
                let bra = Complex64::from_polar(
                    1.0 / d2.sqrt(),
                    TAU * (to.k_index * table.shift_of(f2)) as f64 / n_sites,
                );
                if !row_seen[row_idx] {
                    row_seen[row_idx] = true;
                    rows_touched.push(row_idx);
                }
                row_acc[row_idx] += bra.conj() * amp[f2];
            }
            amp[f2] = Complex64::default();
            seen[f2] = false;
        }
        touched.clear();

        for &row_idx in &rows_touched {
            emit(row_idx, col_idx, row_acc[row_idx]);
            row_acc[row_idx] = Complex64::default();
            row_seen[row_idx] = false;
        }
        rows_touched.clear();
    }
}

/// The reflection `S` as a permutation operator on the Fock basis.
/// `S` maps sector `k` to sector `S - k (mod S)`, so its block is square
/// exactly for `k = 0` and, on even rings, `k = S/2`.
pub fn reflection_operator(basis: &FockBasis) -> OperatorMatrix {
    let dim = basis.dim();
    let one = Complex64::new(1.0, 0.0);
    let rows = (0..dim)
        .map(|r| {
            let c = basis.index_of(&basis.state(r).reflected()).unwrap();
            vec![(c, one)]
        })
        .collect();
    OperatorMatrix::from_rows(rows, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_hamiltonian, enumerate_basis, FockState};
    use crate::ModelParams;

    fn setup(n: usize) -> (ModelParams, FockBasis, OrbitTable) {
        let p = ModelParams::new(4, n, 1.0, -10.0).unwrap();
        let basis = enumerate_basis(&p).unwrap();
        let table = OrbitTable::build(&basis);
        (p, basis, table)
    }

    #[test]
    fn single_particle_orbit_enters_every_sector() {
        let (_, basis, table) = setup(1);
        assert_eq!(table.orbits().len(), 1);
        assert_eq!(table.orbits()[0].period, 4);
        for k in 0..4 {
            let sector = build_sector_basis(&basis, &table, k);
            assert_eq!(sector.dim(), 1);
        }
    }

    #[test]
    fn uniform_state_only_in_k0() {
        let (_, basis, table) = setup(4);
        let uniform = basis.index_of(&FockState::new(vec![1, 1, 1, 1])).unwrap();
        let orbit = table.orbit_of(uniform);
        assert_eq!(table.orbits()[orbit].period, 1);
        for k in 0..4 {
            let sector = build_sector_basis(&basis, &table, k);
            let present = sector.row_of_orbit(orbit).is_some();
            assert_eq!(present, k == 0, "period-1 orbit must live in k=0 only");
        }
    }

    #[test]
    fn sector_dimensions_sum_to_basis_dimension() {
        for n in [1, 2, 3, 4, 5, 6, 10] {
            let (_, basis, table) = setup(n);
            let total: usize = (0..4)
                .map(|k| build_sector_basis(&basis, &table, k).dim())
                .sum();
            assert_eq!(total, basis.dim(), "N={n}");
        }
    }

    #[test]
    fn hamiltonian_commutes_with_rotation() {
        let (p, basis, table) = setup(5);
        let h = build_hamiltonian(&p, &basis);
        assert_eq!(rotation_invariance_defect(&h, &table), 0.0);
    }

    #[test]
    fn single_particle_sector_blocks_are_ring_momenta() {
        let (p, basis, table) = setup(1);
        let h = build_hamiltonian(&p, &basis);
        // -2J cos(2 pi k / 4) = -2, 0, 2, 0
        let expect = [-2.0, 0.0, 2.0, 0.0];
        for k in 0..4 {
            let sector = build_sector_basis(&basis, &table, k);
            let block = project_to_sector(&h, &table, &sector).unwrap();
            assert_eq!(block.nrows(), 1);
            assert!((block[(0, 0)].re - expect[k]).abs() < 1e-12, "k={k}");
            assert!(block[(0, 0)].im.abs() < 1e-12);
        }
    }

    #[test]
    fn imbalance_transfer_within_same_sector_vanishes() {
        let (p, basis, table) = setup(3);
        let imb = crate::fock::build_imbalance_operator(&p, &basis);
        let s0 = build_sector_basis(&basis, &table, 0);
        let block = project_transfer(&imb, &table, &s0, &s0);
        assert!(block.iter().all(|v| v.norm() <= 1e-14));
    }

    #[test]
    fn asymmetric_operator_is_rejected_by_symmetric_projection() {
        let (_, basis, table) = setup(2);
        let n1 = crate::fock::build_number_operator(1, &basis).unwrap();
        let s0 = build_sector_basis(&basis, &table, 0);
        assert!(matches!(
            project_to_sector(&n1, &table, &s0),
            Err(CoreError::NotRotationInvariant(_))
        ));
    }

    #[test]
    fn reflection_squares_to_identity_as_operator() {
        let (_, basis, _) = setup(3);
        let s = reflection_operator(&basis);
        for i in 0..basis.dim() {
            let mut e = vec![Complex64::default(); basis.dim()];
            e[i] = Complex64::new(1.0, 0.0);
            let twice = s.apply(&s.apply(&e));
            assert!((twice[i] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }
}
