//! Glauber coherent states over the fixed-N Fock basis.

use crate::classical::PhasePoint;
use crate::fock::FockBasis;
use crate::ModelParams;
use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

/// Normalized projection of the product coherent state onto the fixed-N
/// sector: amplitudes proportional to `prod_k z_k^{n_k} / sqrt(n_k!)` with
/// `z_k = q_k + i p_k`.
#[derive(Debug, Clone)]
pub struct CoherentState {
    pub amplitudes: Vec<Complex64>,
    pub source_point: PhasePoint,
    /// |norm - 1| after normalization.
    pub norm_check: f64,
}

/// Builds the coherent state for a phase point. Magnitudes are accumulated
/// in log space and exponentiated relative to their maximum, so factorials
/// never overflow and strongly-peaked states do not underflow to zero.
pub fn build_coherent_state(
    x: &PhasePoint,
    params: &ModelParams,
    basis: &FockBasis,
) -> CoherentState {
    assert_eq!(x.n_sites(), params.n_sites);
    let z: Vec<Complex64> = x
        .q()
        .iter()
        .zip(x.p())
        .map(|(&q, &p)| Complex64::new(q, p))
        .collect();
    let ln_mod: Vec<f64> = z.iter().map(|zk| zk.norm().ln()).collect();
    let arg: Vec<f64> = z.iter().map(|zk| zk.arg()).collect();

    let n_max = params.n_particles;
    let ln_fact: Vec<f64> = (0..=n_max).map(|n| ln_gamma(n as f64 + 1.0)).collect();

    let dim = basis.dim();
    let mut log_mag = vec![f64::NEG_INFINITY; dim];
    let mut phase = vec![0.0f64; dim];
    let mut max_log = f64::NEG_INFINITY;

    'states: for (i, state) in basis.states().iter().enumerate() {
        let mut lm = 0.0;
        let mut ph = 0.0;
        for (k, &nk) in state.occupations().iter().enumerate() {
            if nk == 0 {
                continue;
            }
            if z[k].norm() == 0.0 {
                continue 'states; // amplitude exactly zero
            }
            lm += nk as f64 * ln_mod[k] - 0.5 * ln_fact[nk as usize];
            ph += nk as f64 * arg[k];
        }
        log_mag[i] = lm;
        phase[i] = ph;
        max_log = max_log.max(lm);
    }

    let mut amplitudes = vec![Complex64::default(); dim];
    let mut norm_sq = 0.0;
    for i in 0..dim {
        if log_mag[i].is_finite() {
            let a = Complex64::from_polar((log_mag[i] - max_log).exp(), phase[i]);
            norm_sq += a.norm_sqr();
            amplitudes[i] = a;
        }
    }
    let inv = 1.0 / norm_sq.sqrt();
    for a in &mut amplitudes {
        *a *= inv;
    }
    let norm_check = (amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs();

    CoherentState {
        amplitudes,
        source_point: x.clone(),
        norm_check,
    }
}

impl CoherentState {
    /// Intensive site occupations `<n_k>/N`.
    pub fn occupation_fractions(&self, basis: &FockBasis) -> Vec<f64> {
        let ns = basis.n_sites();
        let n = basis.n_particles() as f64;
        let mut occ = vec![0.0; ns];
        for (a, state) in self.amplitudes.iter().zip(basis.states()) {
            let w = a.norm_sqr();
            if w > 0.0 {
                for (k, &nk) in state.occupations().iter().enumerate() {
                    occ[k] += w * nk as f64 / n;
                }
            }
        }
        occ
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::classical_occupations;
    use crate::fock::enumerate_basis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn single_site_condensate_concentrates_on_one_configuration() {
        let p = ModelParams::new(4, 12, 1.0, -10.0).unwrap();
        let basis = enumerate_basis(&p).unwrap();
        let x = PhasePoint::new(vec![2f64.sqrt(), 0.0, 0.0, 0.0], vec![0.0; 4]).unwrap();
        let cs = build_coherent_state(&x, &p, &basis);
        let occ = cs.occupation_fractions(&basis);
        assert!((occ[0] - 1.0).abs() < 1e-12);
        let target = basis
            .index_of(&crate::fock::FockState::new(vec![12, 0, 0, 0]))
            .unwrap();
        assert!((cs.amplitudes[target].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn occupations_track_the_classical_point_at_order_one_over_n() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for &n in &[20usize, 40] {
            let p = ModelParams::new(4, n, 1.0, -10.0).unwrap();
            let basis = enumerate_basis(&p).unwrap();
            let tol = 3.0 / n as f64;
            for _ in 0..20 {
                let raw: Vec<f64> = (0..8).map(|_| StandardNormal.sample(&mut rng)).collect();
                let x = PhasePoint::projected(raw[..4].to_vec(), raw[4..].to_vec());
                let cs = build_coherent_state(&x, &p, &basis);
                assert!(cs.norm_check < 1e-10);
                let quantum = cs.occupation_fractions(&basis);
                let classical = classical_occupations(&x);
                for (qk, ck) in quantum.iter().zip(&classical) {
                    assert!(
                        (qk - ck).abs() < tol,
                        "N={n}: quantum {qk} vs classical {ck}"
                    );
                }
            }
        }
    }
}
