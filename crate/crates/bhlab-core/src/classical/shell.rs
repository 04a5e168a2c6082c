//! Uniform sampling of constant-energy shells on the constraint sphere.

use super::{classical_energy_flat, hamilton_vector_field, PhasePoint};
use crate::{CoreError, ModelParams, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct ShellOptions {
    /// Acceptance window: keep a draw iff |H - eps| <= tol.
    pub tol: f64,
    /// Total draw budget before the sampler gives up.
    pub max_attempts: u64,
    /// Slide rejected draws along the sphere toward the target energy
    /// instead of discarding them. Off by default: plain rejection keeps
    /// the shell measure unbiased; refinement trades that for speed near
    /// the spectrum edges where the shell volume collapses.
    pub refine: bool,
}

impl Default for ShellOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_attempts: 500_000_000,
            refine: false,
        }
    }
}

/// Accepted shell points plus sampling diagnostics.
#[derive(Debug, Clone)]
pub struct ShellSample {
    pub points: Vec<PhasePoint>,
    pub acceptance_rate: f64,
    pub attempts: u64,
}

/// Analytic outer bounds on the attainable intensive energy: the hopping
/// sum is bounded by the constraint norm and the quartic term lies between
/// its concentrated and uniform extremes. Any requested energy outside
/// `[U - 2J, U/4 + 2J]` is unreachable (the true extremes sit inside).
pub fn energy_outer_bounds(params: &ModelParams) -> (f64, f64) {
    let j = params.hopping.abs();
    let u = params.interaction;
    let (u_lo, u_hi) = if u < 0.0 { (u, 0.25 * u) } else { (0.25 * u, u) };
    (u_lo - 2.0 * j, u_hi + 2.0 * j)
}

/// Draws points uniformly on the radius-sqrt(2) hypersphere and keeps those
/// within `tol` of the target energy. Deterministic under `seed`.
pub fn sample_energy_shell(
    params: &ModelParams,
    eps: f64,
    count: usize,
    seed: u64,
    opts: &ShellOptions,
) -> Result<ShellSample> {
    let (lo, hi) = energy_outer_bounds(params);
    if eps <= lo || eps >= hi {
        return Err(CoreError::EnergyOutOfRange { eps, min: lo, max: hi });
    }

    let n_workers = rayon::current_num_threads().max(1);
    let chunk = (count / n_workers + 1).max(8);
    let budget_per_worker = opts.max_attempts / n_workers as u64;

    let worker_out: Vec<(Vec<PhasePoint>, u64)> = (0..n_workers)
        .into_par_iter()
        .map(|w| {
            let mut rng = ChaCha12Rng::seed_from_u64(
                seed ^ 0xd1b5_4a32_d192_ed03u64.wrapping_mul(w as u64 + 1),
            );
            let mut points = Vec::with_capacity(chunk);
            let mut attempts = 0u64;
            let dim = 2 * params.n_sites;
            let mut y = vec![0.0; dim];
            while points.len() < chunk && attempts < budget_per_worker {
                attempts += 1;
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
                if opts.refine && !slide_to_shell(&mut y, params, eps, opts.tol) {
                    continue;
                }
                if (classical_energy_flat(&y, params) - eps).abs() <= opts.tol {
                    points.push(PhasePoint::from_flat(&y));
                }
            }
            (points, attempts)
        })
        .collect();

    let mut points = Vec::with_capacity(count);
    let mut attempts = 0u64;
    for (mut pts, att) in worker_out {
        points.append(&mut pts);
        attempts += att;
    }
    points.truncate(count);

    if points.len() < count {
        return Err(CoreError::ShellSampling {
            accepted: points.len(),
            requested: count,
            attempts,
        });
    }
    Ok(ShellSample {
        acceptance_rate: points.len() as f64 / attempts.max(1) as f64,
        points,
        attempts,
    })
}

/// Newton slide along great circles of the sphere toward `H = eps`;
/// never leaves the sphere. Returns false when the walk stalls.
fn slide_to_shell(y: &mut [f64], params: &ModelParams, eps: f64, tol: f64) -> bool {
    let dim = y.len();
    let ns = params.n_sites;
    let mut grad = vec![0.0; dim];
    let mut field = vec![0.0; dim];
    for _ in 0..60 {
        let h = classical_energy_flat(y, params);
        if (h - eps).abs() <= 0.5 * tol {
            return true;
        }
        // gradient of H from the Hamilton field: dq/dt = dH/dp, dp/dt = -dH/dq
        hamilton_vector_field(y, params, &mut field);
        for i in 0..ns {
            grad[i] = -field[ns + i];
            grad[ns + i] = field[i];
        }
        // tangential component on the sphere of radius sqrt(2)
        let ydotg: f64 = y.iter().zip(&grad).map(|(a, b)| a * b).sum();
        for i in 0..dim {
            grad[i] -= 0.5 * ydotg * y[i];
        }
        let gnorm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-12 {
            return false;
        }
        // great-circle step x(a) = cos(a) x + sin(a) sqrt(2) u keeps |x|^2 = 2
        let da = ((eps - h) / (2f64.sqrt() * gnorm)).clamp(-0.3, 0.3);
        let (sin, cos) = da.sin_cos();
        for i in 0..dim {
            y[i] = cos * y[i] + sin * 2f64.sqrt() * grad[i] / gnorm;
        }
    }
    (classical_energy_flat(y, params) - eps).abs() <= tol
}

/// Number of single-linkage clusters: points closer than `gap` join the
/// same cluster. Used to count the disconnected wells in the imbalance
/// plane of a sampled shell.
pub fn single_linkage_cluster_count(points: &[(f64, f64)], gap: f64) -> usize {
    let n = points.len();
    if n == 0 {
        return 0;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let g2 = gap * gap;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = points[i].0 - points[j].0;
            let dy = points[i].1 - points[j].1;
            if dx * dx + dy * dy <= g2 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    (0..n)
        .map(|i| find(&mut parent, i))
        .collect::<std::collections::HashSet<_>>()
        .len()
}
