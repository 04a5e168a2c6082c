//! Stationary points of the constrained energy functional.
//!
//! Solves `grad L = 0` for `L = H + lambda (sum(q^2+p^2) - 2)` by damped
//! Newton iteration from many random starts. The global U(1) phase freedom
//! `z -> exp(i theta) z` makes the plain system singular, so one momentum
//! coordinate is pinned to zero (`p_g = 0`, `q_g >= 0`) and its gradient
//! equation is recovered from the phase-invariance identity after
//! convergence.

use super::{classical_energy_flat, PhasePoint};
use crate::{CoreError, ModelParams, Result};
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, Solve, UPLO};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Stationary point of the constrained energy, with the number of
/// negative curvature directions on the gauge-fixed tangent space
/// (dimension `2 n_sites - 2`).
#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub point: PhasePoint,
    pub lambda: f64,
    pub eps_c: f64,
    pub hessian_index: usize,
    pub gradient_residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CriticalPointOptions {
    pub n_starts: usize,
    pub max_iterations: usize,
    /// Full-gradient residual required of a converged solution.
    pub residual_tol: f64,
    /// Energy distance under which candidate solutions are compared for
    /// dihedral/phase equivalence.
    pub dedup_energy_tol: f64,
    /// Which momentum coordinate is pinned to zero (0-based site).
    pub gauge_site: usize,
    pub seed: u64,
}

impl Default for CriticalPointOptions {
    fn default() -> Self {
        Self {
            n_starts: 10_000,
            max_iterations: 200,
            residual_tol: 1e-10,
            dedup_energy_tol: 1e-6,
            gauge_site: 0,
            seed: 0x5eed,
        }
    }
}

/// Gradient of H in flat layout `[dH/dq, dH/dp]`.
fn energy_gradient(y: &[f64], params: &ModelParams, grad: &mut [f64]) {
    let ns = params.n_sites;
    let (q, p) = y.split_at(ns);
    let j = params.hopping;
    let u = params.interaction;
    for i in 0..ns {
        let ip = (i + 1) % ns;
        let im = (i + ns - 1) % ns;
        let r2 = q[i] * q[i] + p[i] * p[i];
        grad[i] = -j * (q[ip] + q[im]) + u * q[i] * r2;
        grad[ns + i] = -j * (p[ip] + p[im]) + u * p[i] * r2;
    }
}

/// Hessian of H as a dense symmetric matrix in flat layout.
fn energy_hessian(y: &[f64], params: &ModelParams) -> Array2<f64> {
    let ns = params.n_sites;
    let (q, p) = y.split_at(ns);
    let j = params.hopping;
    let u = params.interaction;
    let mut h = Array2::zeros((2 * ns, 2 * ns));
    for i in 0..ns {
        let ip = (i + 1) % ns;
        let im = (i + ns - 1) % ns;
        let r2 = q[i] * q[i] + p[i] * p[i];
        h[(i, i)] = u * (r2 + 2.0 * q[i] * q[i]);
        h[(ns + i, ns + i)] = u * (r2 + 2.0 * p[i] * p[i]);
        h[(i, ns + i)] = 2.0 * u * q[i] * p[i];
        h[(ns + i, i)] = 2.0 * u * q[i] * p[i];
        h[(i, ip)] += -j;
        h[(i, im)] += -j;
        h[(ns + i, ns + ip)] += -j;
        h[(ns + i, ns + im)] += -j;
    }
    h
}

/// Full gradient of the Lagrange function over `(q, p, lambda)`.
fn lagrange_gradient(y: &[f64], lambda: f64, params: &ModelParams) -> Vec<f64> {
    let dim = y.len();
    let mut g = vec![0.0; dim + 1];
    energy_gradient(y, params, &mut g[..dim]);
    for i in 0..dim {
        g[i] += 2.0 * lambda * y[i];
    }
    g[dim] = y.iter().map(|v| v * v).sum::<f64>() - 2.0;
    g
}

struct NewtonOutcome {
    y: Vec<f64>,
    lambda: f64,
    residual: f64,
}

/// Newton iteration in the reduced variables with `p[gauge] = 0` frozen.
fn newton_from(
    start: &[f64],
    params: &ModelParams,
    opts: &CriticalPointOptions,
) -> Option<NewtonOutcome> {
    let ns = params.n_sites;
    let dim = 2 * ns;
    let g = opts.gauge_site;
    let nu = dim; // q (ns) + p without gauge (ns-1) + lambda

    let mut y = start.to_vec();
    y[ns + g] = 0.0;
    let mut grad = vec![0.0; dim];
    energy_gradient(&y, params, &mut grad);
    let mut lambda = -0.25 * y.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>();

    // reduced index map: p-coordinate columns skip the gauge site
    let p_cols: Vec<usize> = (0..ns).filter(|&i| i != g).collect();

    for _ in 0..opts.max_iterations {
        let full = lagrange_gradient(&y, lambda, params);
        let mut f = Array1::zeros(nu);
        for i in 0..ns {
            f[i] = full[i];
        }
        for (r, &i) in p_cols.iter().enumerate() {
            f[ns + r] = full[ns + i];
        }
        f[nu - 1] = full[dim];

        let fnorm = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if fnorm < 1e-13 {
            break;
        }
        if !fnorm.is_finite() || fnorm > 1e8 {
            return None;
        }

        let hess = energy_hessian(&y, params);
        let mut jac = Array2::zeros((nu, nu));
        for r in 0..ns {
            for c in 0..ns {
                jac[(r, c)] = hess[(r, c)];
            }
            for (cc, &i) in p_cols.iter().enumerate() {
                jac[(r, ns + cc)] = hess[(r, ns + i)];
            }
            jac[(r, r)] += 2.0 * lambda;
            jac[(r, nu - 1)] = 2.0 * y[r];
        }
        for (rr, &ri) in p_cols.iter().enumerate() {
            for c in 0..ns {
                jac[(ns + rr, c)] = hess[(ns + ri, c)];
            }
            for (cc, &ci) in p_cols.iter().enumerate() {
                jac[(ns + rr, ns + cc)] = hess[(ns + ri, ns + ci)];
                if ri == ci {
                    jac[(ns + rr, ns + cc)] += 2.0 * lambda;
                }
            }
            jac[(ns + rr, nu - 1)] = 2.0 * y[ns + ri];
        }
        for c in 0..ns {
            jac[(nu - 1, c)] = 2.0 * y[c];
        }
        for (cc, &ci) in p_cols.iter().enumerate() {
            jac[(nu - 1, ns + cc)] = 2.0 * y[ns + ci];
        }

        let step = jac.solve(&f).ok()?;
        for i in 0..ns {
            y[i] -= step[i];
        }
        for (r, &i) in p_cols.iter().enumerate() {
            y[ns + i] -= step[ns + r];
        }
        lambda -= step[nu - 1];
    }

    // full residual including the frozen p-equation; phase invariance
    // makes it vanish automatically whenever q[gauge] != 0
    let full = lagrange_gradient(&y, lambda, params);
    let residual = full.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if residual > opts.residual_tol {
        return None;
    }
    if y[g] < 0.0 {
        for v in y.iter_mut() {
            *v = -*v;
        }
    }
    Some(NewtonOutcome { y, lambda, residual })
}

/// Negative-eigenvalue count of the Lagrangian Hessian restricted to the
/// tangent space with the radial and phase directions projected out.
fn hessian_index(y: &[f64], lambda: f64, params: &ModelParams) -> usize {
    let ns = params.n_sites;
    let dim = 2 * ns;
    let mut b = energy_hessian(y, params);
    for i in 0..dim {
        b[(i, i)] += 2.0 * lambda;
    }

    let radial: Vec<f64> = y.to_vec();
    let phase: Vec<f64> = (0..dim)
        .map(|i| if i < ns { -y[ns + i] } else { y[i - ns] })
        .collect();
    let mut proj = Array2::eye(dim);
    for dir in [&radial, &phase] {
        let norm2: f64 = dir.iter().map(|v| v * v).sum();
        if norm2 < 1e-14 {
            continue;
        }
        for r in 0..dim {
            for c in 0..dim {
                proj[(r, c)] -= dir[r] * dir[c] / norm2;
            }
        }
    }
    let m = proj.dot(&b).dot(&proj);
    let (eigs, _) = m.eigh(UPLO::Lower).expect("symmetric eigensolve");
    let scale = eigs.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
    eigs.iter().filter(|&&e| e < -1e-7 * scale).count()
}

fn dihedral_images(y: &[f64], ns: usize) -> Vec<Vec<Complex64>> {
    let z: Vec<Complex64> = (0..ns).map(|i| Complex64::new(y[i], y[ns + i])).collect();
    let mut images = Vec::with_capacity(2 * ns);
    for refl in [false, true] {
        let base: Vec<Complex64> = if refl {
            z.iter().rev().copied().collect()
        } else {
            z.clone()
        };
        for r in 0..ns {
            images.push((0..ns).map(|i| base[(i + r) % ns]).collect());
        }
    }
    images
}

/// True when the two points coincide up to a dihedral transformation and a
/// global phase.
fn equivalent_mod_symmetry(a: &[f64], b: &[f64], ns: usize, tol: f64) -> bool {
    let zb: Vec<Complex64> = (0..ns).map(|i| Complex64::new(b[i], b[ns + i])).collect();
    for image in dihedral_images(a, ns) {
        let overlap: Complex64 = zb
            .iter()
            .zip(&image)
            .map(|(x, w)| x.conj() * w)
            .sum();
        let phase = if overlap.norm() > 1e-12 {
            overlap / overlap.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let dist2: f64 = image
            .iter()
            .zip(&zb)
            .map(|(w, x)| (w * phase.conj() - x).norm_sqr())
            .sum();
        if dist2.sqrt() < tol {
            return true;
        }
    }
    false
}

/// Multi-start Newton search for every stationary point of the Lagrange
/// function. Starts are uniform on the constraint sphere, rotated into the
/// gauge slice. Diverged starts are dropped silently; an empty final set is
/// an error.
pub fn find_critical_points(
    params: &ModelParams,
    opts: &CriticalPointOptions,
) -> Result<Vec<CriticalPoint>> {
    let ns = params.n_sites;
    let dim = 2 * ns;
    let g = opts.gauge_site;

    let outcomes: Vec<NewtonOutcome> = (0..opts.n_starts)
        .into_par_iter()
        .filter_map(|s| {
            let mut rng = ChaCha12Rng::seed_from_u64(
                opts.seed ^ 0xa076_1d64_78bd_642fu64.wrapping_mul(s as u64 + 1),
            );
            let mut y = vec![0.0; dim];
            let mut norm = 0.0;
            for v in y.iter_mut() {
                let noise: f64 = StandardNormal.sample(&mut rng);
                *v = noise;
                norm += *v * *v;
            }
            let scale = (2.0 / norm).sqrt();
            for v in y.iter_mut() {
                *v *= scale;
            }
            // rotate the global phase so p[gauge] = 0, q[gauge] >= 0
            let zg = Complex64::new(y[g], y[ns + g]);
            if zg.norm() > 1e-12 {
                let phase = zg / zg.norm();
                for i in 0..ns {
                    let z = Complex64::new(y[i], y[ns + i]) * phase.conj();
                    y[i] = z.re;
                    y[ns + i] = z.im;
                }
            }
            newton_from(&y, params, opts)
        })
        .collect();

    let mut kept: Vec<CriticalPoint> = Vec::new();
    for out in outcomes {
        let eps_c = classical_energy_flat(&out.y, params);
        let duplicate = kept.iter().any(|cp| {
            (cp.eps_c - eps_c).abs() <= opts.dedup_energy_tol
                && equivalent_mod_symmetry(&cp.point.to_flat(), &out.y, ns, 1e-5)
        });
        if duplicate {
            continue;
        }
        let index = hessian_index(&out.y, out.lambda, params);
        kept.push(CriticalPoint {
            point: PhasePoint::from_flat(&out.y),
            lambda: out.lambda,
            eps_c,
            hessian_index: index,
            gradient_residual: out.residual,
        });
    }

    if kept.is_empty() {
        return Err(CoreError::NoCriticalPoints);
    }
    kept.sort_by(|a, b| a.eps_c.total_cmp(&b.eps_c));
    Ok(kept)
}

/// Deduplicated energy list of a critical-point set.
pub fn distinct_energies(points: &[CriticalPoint], tol: f64) -> Vec<f64> {
    let mut energies: Vec<f64> = Vec::new();
    for cp in points {
        if !energies.iter().any(|e| (e - cp.eps_c).abs() <= tol) {
            energies.push(cp.eps_c);
        }
    }
    energies.sort_by(|a, b| a.total_cmp(b));
    energies
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(4, 35, 1.0, -10.0).unwrap()
    }

    #[test]
    fn uniform_condensate_is_a_newton_fixed_point() {
        let c = 0.5f64.sqrt();
        let start = vec![c, c, c, c, 0.0, 0.0, 0.0, 0.0];
        let out = newton_from(&start, &params(), &CriticalPointOptions::default()).unwrap();
        for (a, b) in out.y.iter().zip(&start) {
            assert!((a - b).abs() < 1e-10);
        }
        let eps = classical_energy_flat(&out.y, &params());
        assert!((eps + 4.5).abs() < 1e-12);
        assert!((out.lambda - 3.5).abs() < 1e-10);
    }

    #[test]
    fn perturbed_condensate_falls_into_the_global_minimum() {
        let mut start = vec![2f64.sqrt(), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        start[1] += 0.01;
        start[2] -= 0.01;
        let out = newton_from(&start, &params(), &CriticalPointOptions::default()).unwrap();
        let eps = classical_energy_flat(&out.y, &params());
        assert!((eps + 10.1).abs() < 5e-3, "eps = {eps}");
        assert!(out.residual <= 1e-10);
    }

    #[test]
    fn small_search_finds_minimum_and_maximum() {
        let opts = CriticalPointOptions {
            n_starts: 400,
            seed: 42,
            ..Default::default()
        };
        let points = find_critical_points(&params(), &opts).unwrap();
        let energies = distinct_energies(&points, 1e-4);
        let has = |target: f64| energies.iter().any(|e| (e - target).abs() < 5e-3);
        assert!(has(-10.1), "missing minimum in {energies:?}");
        assert!(has(-0.5), "missing maximum in {energies:?}");
        assert!(has(-4.5), "missing uniform condensate in {energies:?}");
        // the minimum has index 0, the maximum exhausts the reduced space
        let min_cp = &points[0];
        assert_eq!(min_cp.hessian_index, 0);
        let max_cp = points.last().unwrap();
        assert_eq!(max_cp.hessian_index, 2 * 4 - 2);
    }

    #[test]
    fn gauge_choice_does_not_move_the_energies() {
        let base = CriticalPointOptions {
            n_starts: 300,
            seed: 7,
            ..Default::default()
        };
        let alt = CriticalPointOptions {
            gauge_site: 1,
            ..base
        };
        let e1 = distinct_energies(&find_critical_points(&params(), &base).unwrap(), 1e-4);
        let e2 = distinct_energies(&find_critical_points(&params(), &alt).unwrap(), 1e-4);
        for e in &e1 {
            assert!(
                e2.iter().any(|f| (e - f).abs() < 1e-8),
                "energy {e} not reproduced under the alternate gauge: {e2:?}"
            );
        }
    }
}
