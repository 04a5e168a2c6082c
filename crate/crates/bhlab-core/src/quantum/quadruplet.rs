//! Reduced imbalance blocks on quasi-degenerate level multiplets.
//!
//! The `n`-th eigenstates of every momentum sector are grouped into one
//! multiplet; the imbalance restricted to that multiplet has nonzero
//! entries only on the cyclic `k -> k+1` band, so its eigenvalues are the
//! `S`-th roots of the band product and share a single modulus.

use crate::fock::{
    project_transfer_sparse, OperatorMatrix, SectorEigensystem, SpectralDecomposition,
};
use crate::{CoreError, Result};
use ndarray::Array2;
use ndarray_linalg::Eig;
use num_complex::Complex64;

/// Imbalance block on the `n`-th quasi-degenerate multiplet.
#[derive(Debug, Clone)]
pub struct QuadrupletBlock {
    /// Multiplet index (0-based position within each sorted sector).
    pub n_index: usize,
    /// Extensive eigenvalues `E_{n,k}` for `k = 0..S`.
    pub energies: Vec<f64>,
    /// The reduced imbalance, rows/columns ordered by sector index.
    pub block: Array2<Complex64>,
    /// Eigenvalues `i_{n,r}` of the block.
    pub eigenvalues: Vec<Complex64>,
    /// Largest intra-multiplet energy gap `max |E_{n,k} - E_{n,k'}|`.
    pub max_gap: f64,
    /// Mean intensive energy of the multiplet.
    pub eps_mean: f64,
}

/// All multiplet blocks plus bookkeeping for uneven sector sizes.
#[derive(Debug, Clone)]
pub struct QuadrupletSet {
    pub blocks: Vec<QuadrupletBlock>,
    /// Levels beyond the shortest sector, reported per sector index.
    pub leftover: Vec<(usize, usize)>,
}

/// Builds every multiplet block of the intensive imbalance. Pairing is by
/// sorted level index within each sector; blocks are truncated at the
/// shortest sector and the remainder is reported, not dropped silently.
pub fn build_quadruplet_blocks(
    sd: &SpectralDecomposition,
    imbalance: &OperatorMatrix,
) -> Result<QuadrupletSet> {
    let ns = sd.n_sites();
    let n_particles = sd.params.n_particles as f64;

    // <k+1| I |k> in the eigenbasis: only the band diagonals are needed,
    // and the sector-basis transfer matrix couples only shared orbits
    let transfers: Vec<Vec<(usize, usize, Complex64)>> = (0..ns)
        .map(|k| {
            let from = &sd.sectors[k];
            let to = &sd.sectors[(k + 1) % ns];
            project_transfer_sparse(imbalance, &sd.orbits, from, to)
        })
        .collect();
    // the same-sector block, used for the honest zero-diagonal check
    let same_sector: Vec<Vec<(usize, usize, Complex64)>> = (0..ns)
        .map(|k| project_transfer_sparse(imbalance, &sd.orbits, &sd.sectors[k], &sd.sectors[k]))
        .collect();

    let n_blocks = sd.eigensystems.iter().map(|e| e.dim()).min().unwrap_or(0);
    let leftover: Vec<(usize, usize)> = sd
        .eigensystems
        .iter()
        .map(|e| (e.k_index, e.dim() - n_blocks))
        .collect();

    let band = |triplets: &[(usize, usize, Complex64)],
                bra: &SectorEigensystem,
                ket: &SectorEigensystem,
                n: usize| {
        let mut acc = Complex64::default();
        for &(row, col, v) in triplets {
            acc += bra.vectors[(row, n)].conj() * v * ket.vectors[(col, n)];
        }
        acc
    };

    let mut blocks = Vec::with_capacity(n_blocks);
    for n in 0..n_blocks {
        let mut block = Array2::zeros((ns, ns));
        for k in 0..ns {
            let kp = (k + 1) % ns;
            block[(kp, k)] =
                band(&transfers[k], &sd.eigensystems[kp], &sd.eigensystems[k], n);
            block[(k, k)] = band(&same_sector[k], &sd.eigensystems[k], &sd.eigensystems[k], n);
        }
        let energies: Vec<f64> = (0..ns).map(|k| sd.eigensystems[k].energies[n]).collect();
        let mut max_gap = 0.0f64;
        for a in 0..ns {
            for b in (a + 1)..ns {
                max_gap = max_gap.max((energies[a] - energies[b]).abs());
            }
        }
        let eps_mean = energies.iter().sum::<f64>() / (ns as f64 * n_particles);
        let eigenvalues = quadruplet_eigenvalues(&block)?;
        blocks.push(QuadrupletBlock {
            n_index: n,
            energies,
            block,
            eigenvalues,
            max_gap,
            eps_mean,
        });
    }

    Ok(QuadrupletSet { blocks, leftover })
}

/// Eigenvalues of a reduced block through a dense general eigensolver.
pub fn quadruplet_eigenvalues(block: &Array2<Complex64>) -> Result<Vec<Complex64>> {
    let (eigs, _) = block.eig().map_err(|e| CoreError::Eigensolver {
        k: usize::MAX,
        msg: format!("quadruplet block: {e}"),
    })?;
    let mut v = eigs.to_vec();
    // deterministic order: descending modulus, then phase
    v.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(a.arg().total_cmp(&b.arg()))
    });
    Ok(v)
}

/// Fraction of block eigenvalues with `|i|^2` above `threshold`, optionally
/// restricted to blocks whose mean energy falls inside `eps_window`.
pub fn nonzero_fraction(
    blocks: &[QuadrupletBlock],
    threshold: f64,
    eps_window: Option<(f64, f64)>,
) -> f64 {
    let mut total = 0usize;
    let mut nonzero = 0usize;
    for b in blocks {
        if let Some((lo, hi)) = eps_window {
            if b.eps_mean < lo || b.eps_mean >= hi {
                continue;
            }
        }
        for ev in &b.eigenvalues {
            total += 1;
            if ev.norm_sqr() > threshold {
                nonzero += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        nonzero as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::build_imbalance_operator;
    use crate::ModelParams;

    fn quadruplets(n: usize) -> (SpectralDecomposition, QuadrupletSet) {
        let p = ModelParams::new(4, n, 1.0, -10.0).unwrap();
        let sd = SpectralDecomposition::build(&p).unwrap();
        let imb = build_imbalance_operator(&p, &sd.basis);
        let set = build_quadruplet_blocks(&sd, &imb).unwrap();
        (sd, set)
    }

    #[test]
    fn diagonals_vanish_and_moduli_are_equal() {
        let (_, set) = quadruplets(10);
        assert!(!set.blocks.is_empty());
        for b in &set.blocks {
            for k in 0..4 {
                assert!(
                    b.block[(k, k)].norm() <= 1e-10,
                    "n={} diagonal {}",
                    b.n_index,
                    b.block[(k, k)]
                );
            }
            let m0 = b.eigenvalues[0].norm();
            for ev in &b.eigenvalues {
                assert!((ev.norm() - m0).abs() <= 1e-8, "n={}", b.n_index);
            }
        }
    }

    #[test]
    fn eigenvalues_are_fourth_roots_of_the_band_product() {
        let (_, set) = quadruplets(8);
        for b in set.blocks.iter().take(30) {
            let prod: Complex64 = (0..4).map(|k| b.block[((k + 1) % 4, k)]).product();
            let target = prod.norm().powf(0.25);
            for ev in &b.eigenvalues {
                assert!(
                    (ev.norm() - target).abs() <= 1e-10,
                    "modulus {} vs (prod)^{{1/4}} {}",
                    ev.norm(),
                    target
                );
            }
            // the four eigenvalues partition the circle in quarters
            let mut args: Vec<f64> = b.eigenvalues.iter().map(|e| e.arg()).collect();
            args.sort_by(|a, b| a.total_cmp(b));
            if target > 1e-12 {
                for w in args.windows(2) {
                    let gap = w[1] - w[0];
                    assert!(
                        (gap - std::f64::consts::FRAC_PI_2).abs() < 1e-6,
                        "gap {gap}"
                    );
                }
            }
        }
    }

    #[test]
    fn low_energy_blocks_carry_finite_imbalance_at_modest_n() {
        let (_, set) = quadruplets(20);
        // deep symmetry-broken region
        let deep: Vec<&QuadrupletBlock> = set
            .blocks
            .iter()
            .filter(|b| b.eps_mean < -7.0)
            .collect();
        assert!(!deep.is_empty());
        for b in deep {
            assert!(
                b.eigenvalues[0].norm() > 0.1,
                "eps={} |i|={}",
                b.eps_mean,
                b.eigenvalues[0].norm()
            );
        }
    }

    #[test]
    fn all_zero_block_contributes_nothing() {
        let block = Array2::zeros((4, 4));
        let eigs = quadruplet_eigenvalues(&block).unwrap();
        let b = QuadrupletBlock {
            n_index: 0,
            energies: vec![0.0; 4],
            block,
            eigenvalues: eigs,
            max_gap: 0.0,
            eps_mean: 0.0,
        };
        assert_eq!(nonzero_fraction(&[b], 1e-3, None), 0.0);
    }

    #[test]
    fn sector_length_mismatch_is_reported() {
        // N=4 has a period-1 orbit (1,1,1,1) and period-2 orbits, so k=0
        // is strictly larger than the other sectors
        let (sd, set) = quadruplets(4);
        let dims: Vec<usize> = sd.eigensystems.iter().map(|e| e.dim()).collect();
        let min = *dims.iter().min().unwrap();
        for (k, left) in &set.leftover {
            assert_eq!(*left, dims[*k] - min);
        }
        assert!(set.leftover.iter().any(|(_, l)| *l > 0));
    }
}
