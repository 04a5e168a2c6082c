//! Dense Hermitian eigensolver front-end for the sector blocks.

use super::operators::{build_hamiltonian, OperatorMatrix};
use super::symmetry::{build_sector_basis, project_to_sector, MomentumSectorBasis, OrbitTable};
use super::{enumerate_basis_capped, FockBasis, DEFAULT_MAX_DIM};
use crate::{CoreError, ModelParams, Result};
use ndarray::{Array2, ArrayView1};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

/// Eigenvalues and eigenvectors of one momentum-sector block.
#[derive(Debug, Clone)]
pub struct SectorEigensystem {
    pub k_index: usize,
    /// Extensive eigenvalues, ascending.
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors as columns, phases fixed so the largest
    /// modulus component of each column is real positive.
    pub vectors: Array2<Complex64>,
}

impl SectorEigensystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn vector(&self, n: usize) -> ArrayView1<'_, Complex64> {
        self.vectors.column(n)
    }
}

/// Diagonalizes one Hermitian sector block, ascending eigenvalues.
pub fn diagonalize_sector(k_index: usize, block: &Array2<Complex64>) -> Result<SectorEigensystem> {
    let scale = block.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    if scale > 0.0 {
        let mut defect = 0.0f64;
        for i in 0..block.nrows() {
            for j in 0..=i {
                defect = defect.max((block[(i, j)] - block[(j, i)].conj()).norm());
            }
        }
        if defect / scale > 1e-12 {
            return Err(CoreError::NotHermitian {
                k: k_index,
                defect: defect / scale,
            });
        }
    }

    let (energies, mut vectors) = block
        .eigh(UPLO::Lower)
        .map_err(|e| CoreError::Eigensolver {
            k: k_index,
            msg: e.to_string(),
        })?;

    // fix the free phase of each eigenvector
    for mut col in vectors.columns_mut() {
        let mut best = 0usize;
        let mut best_norm = 0.0f64;
        for (i, v) in col.iter().enumerate() {
            let n = v.norm_sqr();
            if n > best_norm {
                best_norm = n;
                best = i;
            }
        }
        if best_norm > 0.0 {
            let phase = col[best] / col[best].norm();
            let rot = phase.conj();
            col.mapv_inplace(|v| v * rot);
        }
    }

    Ok(SectorEigensystem {
        k_index,
        energies: energies.to_vec(),
        vectors,
    })
}

/// Full symmetry-resolved eigendecomposition of the ring Hamiltonian:
/// basis, orbit table, sector bases and one eigensystem per sector.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub params: ModelParams,
    pub basis: FockBasis,
    pub orbits: OrbitTable,
    pub hamiltonian: OperatorMatrix,
    pub sectors: Vec<MomentumSectorBasis>,
    pub eigensystems: Vec<SectorEigensystem>,
}

impl SpectralDecomposition {
    pub fn build(params: &ModelParams) -> Result<Self> {
        Self::build_capped(params, DEFAULT_MAX_DIM)
    }

    pub fn build_capped(params: &ModelParams, max_dim: usize) -> Result<Self> {
        let basis = enumerate_basis_capped(params, max_dim)?;
        let hamiltonian = build_hamiltonian(params, &basis);
        let orbits = OrbitTable::build(&basis);

        let sectors: Vec<MomentumSectorBasis> = (0..params.n_sites)
            .map(|k| build_sector_basis(&basis, &orbits, k))
            .collect();

        // LAPACK calls stay sequential; each one threads internally.
        let mut eigensystems = Vec::with_capacity(params.n_sites);
        for sector in &sectors {
            let block = project_to_sector(&hamiltonian, &orbits, sector)?;
            eigensystems.push(diagonalize_sector(sector.k_index, &block)?);
        }

        Ok(Self {
            params: *params,
            basis,
            orbits,
            hamiltonian,
            sectors,
            eigensystems,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.params.n_sites
    }

    pub fn sector(&self, k: usize) -> Result<&MomentumSectorBasis> {
        self.sectors.get(k).ok_or(CoreError::MissingSector(k))
    }

    pub fn eigensystem(&self, k: usize) -> Result<&SectorEigensystem> {
        self.eigensystems.get(k).ok_or(CoreError::MissingSector(k))
    }

    /// All eigenvalues across sectors, ascending.
    pub fn all_energies_sorted(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .eigensystems
            .iter()
            .flat_map(|e| e.energies.iter().copied())
            .collect();
        all.sort_by(|a, b| a.total_cmp(b));
        all
    }

    /// Ground-state energy per particle.
    pub fn ground_state_eps(&self) -> f64 {
        let e0 = self
            .eigensystems
            .iter()
            .map(|e| e.energies[0])
            .fold(f64::INFINITY, f64::min);
        self.params.intensive(e0)
    }

    /// Scatter a sector-basis vector back to Fock amplitudes,
    /// accumulating into `out`.
    pub fn scatter_to_fock(
        &self,
        k: usize,
        sector_vec: ArrayView1<'_, Complex64>,
        out: &mut [Complex64],
    ) {
        let sector = &self.sectors[k];
        let n_sites = self.params.n_sites as f64;
        for (row, &orbit_id) in sector.member_orbits().iter().enumerate() {
            let orbit = &self.orbits.orbits()[orbit_id];
            let norm = 1.0 / (orbit.period as f64).sqrt();
            let v = sector_vec[row];
            for (j, &f) in orbit.members.iter().enumerate() {
                let coeff = Complex64::from_polar(
                    norm,
                    std::f64::consts::TAU * (k * j) as f64 / n_sites,
                );
                out[f] += coeff * v;
            }
        }
    }

    /// Project Fock amplitudes onto one sector basis (adjoint of
    /// [`Self::scatter_to_fock`]).
    pub fn gather_from_fock(&self, k: usize, fock: &[Complex64]) -> Vec<Complex64> {
        let sector = &self.sectors[k];
        let n_sites = self.params.n_sites as f64;
        let mut out = vec![Complex64::default(); sector.dim()];
        for (row, &orbit_id) in sector.member_orbits().iter().enumerate() {
            let orbit = &self.orbits.orbits()[orbit_id];
            let norm = 1.0 / (orbit.period as f64).sqrt();
            let mut acc = Complex64::default();
            for (j, &f) in orbit.members.iter().enumerate() {
                let coeff = Complex64::from_polar(
                    norm,
                    std::f64::consts::TAU * (k * j) as f64 / n_sites,
                );
                acc += coeff.conj() * fock[f];
            }
            out[row] = acc;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_particle_sector_eigenvalues() {
        let p = ModelParams::new(4, 1, 1.0, -10.0).unwrap();
        let sd = SpectralDecomposition::build(&p).unwrap();
        let expect = [-2.0, 0.0, 2.0, 0.0];
        for k in 0..4 {
            let e = &sd.eigensystems[k];
            assert_eq!(e.energies.len(), 1);
            assert!((e.energies[0] - expect[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn scatter_gather_roundtrip_is_identity_on_sector() {
        let p = ModelParams::new(4, 3, 1.0, -10.0).unwrap();
        let sd = SpectralDecomposition::build(&p).unwrap();
        for k in 0..4 {
            let dim_k = sd.sectors[k].dim();
            for col in 0..dim_k.min(3) {
                let mut fock = vec![Complex64::default(); sd.basis.dim()];
                sd.scatter_to_fock(k, sd.eigensystems[k].vector(col), &mut fock);
                let back = sd.gather_from_fock(k, &fock);
                for (i, b) in back.iter().enumerate() {
                    let expect = sd.eigensystems[k].vectors[(i, col)];
                    assert!((b - expect).norm() < 1e-12);
                }
                // and nothing leaks into other sectors
                let other = sd.gather_from_fock((k + 1) % 4, &fock);
                assert!(other.iter().all(|v| v.norm() < 1e-12));
            }
        }
    }

    #[test]
    fn eigenvector_phases_have_real_positive_pivot() {
        let p = ModelParams::new(4, 4, 1.0, -10.0).unwrap();
        let sd = SpectralDecomposition::build(&p).unwrap();
        for eig in &sd.eigensystems {
            for col in eig.vectors.columns() {
                let pivot = col
                    .iter()
                    .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
                    .unwrap();
                assert!(pivot.im.abs() <= 1e-10 * pivot.norm().max(1e-300));
                assert!(pivot.re >= 0.0);
            }
        }
    }
}
