//! Sparse operators on the Fock basis.

use super::FockBasis;
use crate::{CoreError, ModelParams, Result};
use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Row-wise sparse complex matrix; entry lists hold `(column, value)` with
/// `value = <row|O|col>`. Both triangles are stored explicitly.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    dim: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn from_rows(rows: Vec<Vec<(usize, Complex64)>>, hermitian: bool) -> Self {
        let dim = rows.len();
        Self {
            dim,
            rows,
            hermitian,
        }
    }

    pub fn diagonal_from(values: Vec<Complex64>) -> Self {
        let hermitian = values.iter().all(|v| v.im == 0.0);
        let rows = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| vec![(i, v)])
            .collect();
        Self::from_rows(rows, hermitian)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn row(&self, i: usize) -> &[(usize, Complex64)] {
        &self.rows[i]
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.rows[r]
            .iter()
            .find(|(j, _)| *j == c)
            .map(|(_, v)| *v)
            .unwrap_or_default()
    }

    /// Extracts the diagonal if the matrix has no off-diagonal entries.
    pub fn as_diagonal(&self) -> Option<Vec<Complex64>> {
        let mut diag = vec![Complex64::default(); self.dim];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                if i != j && v != Complex64::default() {
                    return None;
                }
                if i == j {
                    diag[i] = v;
                }
            }
        }
        Some(diag)
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![Complex64::default(); self.dim];
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = Complex64::default();
            for &(j, v) in row {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// <x|O|x> for a normalized vector.
    pub fn expectation(&self, x: &[Complex64]) -> Complex64 {
        let y = self.apply(x);
        x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn to_dense(&self) -> Array2<Complex64> {
        let mut m = Array2::zeros((self.dim, self.dim));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// max_ij |a_ij - conj(a_ji)| relative to the largest entry modulus.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut scale = 0.0f64;
        let mut defect = 0.0f64;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                scale = scale.max(v.norm());
                let d = (v - self.get(j, i).conj()).norm();
                defect = defect.max(d);
            }
        }
        if scale > 0.0 {
            defect / scale
        } else {
            0.0
        }
    }

    pub fn max_entry_norm(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Bose-Hubbard ring Hamiltonian: nearest-neighbor hopping `-J` with
/// periodic boundaries plus the on-site interaction `(U/N) n_i (n_i - 1)`.
pub fn build_hamiltonian(params: &ModelParams, basis: &FockBasis) -> OperatorMatrix {
    let ns = params.n_sites;
    let n = params.n_particles as f64;
    let j = params.hopping;
    let u_over_n = params.interaction / n;

    let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::with_capacity(2 * ns + 1); basis.dim()];

    for (col, state) in basis.states().iter().enumerate() {
        let occ = state.occupations();

        let diag: f64 = occ
            .iter()
            .map(|&nk| u_over_n * nk as f64 * (nk as f64 - 1.0))
            .sum();
        rows[col].push((col, Complex64::new(diag, 0.0)));

        // hop one boson from site i to site i+1 and the reverse; the
        // matrix is filled column by column, rows get the Hermitian pair
        for i in 0..ns {
            let ip = (i + 1) % ns;
            for (src, dst) in [(i, ip), (ip, i)] {
                if occ[src] == 0 {
                    continue;
                }
                let mut moved = occ.to_vec();
                moved[src] -= 1;
                moved[dst] += 1;
                let target = basis
                    .index_of(&super::FockState::new(moved))
                    .expect("hopping stays inside the fixed-N basis");
                let amp = -j * ((occ[src] as f64) * (occ[dst] as f64 + 1.0)).sqrt();
                rows[target].push((col, Complex64::new(amp, 0.0)));
            }
        }
    }

    for row in &mut rows {
        row.sort_unstable_by_key(|(j, _)| *j);
    }
    OperatorMatrix::from_rows(rows, true)
}

/// Diagonal particle-number operator on a 1-based site index.
pub fn build_number_operator(site: usize, basis: &FockBasis) -> Result<OperatorMatrix> {
    if site == 0 || site > basis.n_sites() {
        return Err(CoreError::SiteOutOfRange {
            site,
            n_sites: basis.n_sites(),
        });
    }
    let diag = basis
        .states()
        .iter()
        .map(|s| Complex64::new(s.occupations()[site - 1] as f64, 0.0))
        .collect();
    Ok(OperatorMatrix::diagonal_from(diag))
}

/// Root-of-unity weight sum `sum_k n_k exp(2 pi i (k-1)/S) / N` for one
/// occupation vector. This is the diagonal entry of the intensive
/// generalized imbalance.
pub fn imbalance_weight(n_sites: usize, n_particles: usize, occ: &[u32]) -> Complex64 {
    let mut acc = Complex64::default();
    for (k, &nk) in occ.iter().enumerate() {
        let phase = TAU * k as f64 / n_sites as f64;
        acc += nk as f64 * Complex64::from_polar(1.0, phase);
    }
    acc / n_particles as f64
}

/// Intensive generalized imbalance `I = (1/N) sum_k n_k exp(2 pi i (k-1)/S)`.
/// Diagonal in the Fock basis, complex and non-Hermitian; it carries one
/// unit of ring momentum: `R^dag I R = exp(2 pi i / S) I`.
pub fn build_imbalance_operator(params: &ModelParams, basis: &FockBasis) -> OperatorMatrix {
    let diag = basis
        .states()
        .iter()
        .map(|s| imbalance_weight(params.n_sites, params.n_particles, s.occupations()))
        .collect();
    OperatorMatrix::diagonal_from(diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{enumerate_basis, FockState};
    use approx::assert_abs_diff_eq;

    fn params(n_sites: usize, n: usize) -> ModelParams {
        ModelParams::new(n_sites, n, 1.0, -10.0).unwrap()
    }

    #[test]
    fn interaction_diagonal_of_doubly_occupied_site() {
        let p = params(4, 2);
        let basis = enumerate_basis(&p).unwrap();
        let h = build_hamiltonian(&p, &basis);
        let i = basis.index_of(&FockState::new(vec![2, 0, 0, 0])).unwrap();
        // (U/N) * 2 * 1 = -10
        assert_abs_diff_eq!(h.get(i, i).re, -10.0, epsilon = 1e-14);
        assert_eq!(h.get(i, i).im, 0.0);
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let p = params(4, 5);
        let basis = enumerate_basis(&p).unwrap();
        let h = build_hamiltonian(&p, &basis);
        assert!(h.hermiticity_defect() <= 1e-12);
    }

    #[test]
    fn number_operators_sum_to_total_n() {
        let p = params(4, 2);
        let basis = enumerate_basis(&p).unwrap();
        let mut total = vec![0.0; basis.dim()];
        for site in 1..=4 {
            let nk = build_number_operator(site, &basis).unwrap();
            let diag = nk.as_diagonal().unwrap();
            for (t, d) in total.iter_mut().zip(diag) {
                *t += d.re;
            }
        }
        assert!(total.iter().all(|&t| t == 2.0));
    }

    #[test]
    fn number_operator_traces_match_across_sites() {
        let p = params(4, 2);
        let basis = enumerate_basis(&p).unwrap();
        let trace = |site: usize| -> f64 {
            build_number_operator(site, &basis)
                .unwrap()
                .as_diagonal()
                .unwrap()
                .iter()
                .map(|v| v.re)
                .sum()
        };
        let t1 = trace(1);
        for site in 2..=4 {
            assert_abs_diff_eq!(trace(site), t1, epsilon = 1e-12);
        }
    }

    #[test]
    fn number_operator_rejects_out_of_range_site() {
        let p = params(4, 1);
        let basis = enumerate_basis(&p).unwrap();
        assert!(build_number_operator(0, &basis).is_err());
        assert!(build_number_operator(5, &basis).is_err());
    }

    #[test]
    fn imbalance_of_single_site_condensates() {
        let p = params(4, 3);
        let basis = enumerate_basis(&p).unwrap();
        let imb = build_imbalance_operator(&p, &basis);
        let diag = imb.as_diagonal().unwrap();

        let all_on = |site: usize| {
            let mut occ = vec![0u32; 4];
            occ[site] = 3;
            basis.index_of(&FockState::new(occ)).unwrap()
        };
        // all particles on site 1 -> 1; on site 2 -> i
        assert_abs_diff_eq!(diag[all_on(0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(diag[all_on(0)].im, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(diag[all_on(1)].re, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(diag[all_on(1)].im, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn imbalance_of_uniform_state_vanishes() {
        let p = params(4, 8);
        let basis = enumerate_basis(&p).unwrap();
        let imb = build_imbalance_operator(&p, &basis);
        let i = basis.index_of(&FockState::new(vec![2, 2, 2, 2])).unwrap();
        assert!(imb.as_diagonal().unwrap()[i].norm() <= 1e-15);
    }

    #[test]
    fn imbalance_modulus_bounded_by_one() {
        let p = params(4, 7);
        let basis = enumerate_basis(&p).unwrap();
        let imb = build_imbalance_operator(&p, &basis);
        for v in imb.as_diagonal().unwrap() {
            assert!(v.norm() <= 1.0 + 1e-12);
        }
    }
}
