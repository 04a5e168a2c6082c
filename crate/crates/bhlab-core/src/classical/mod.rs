//! Classical limit of the ring: dynamics on the constraint sphere
//! `sum_k (q_k^2 + p_k^2) = 2`.

mod critical;
mod dop853_tables;
mod integrate;
mod lyapunov;
mod shell;

pub use critical::{distinct_energies, find_critical_points, CriticalPoint, CriticalPointOptions};
pub use integrate::{
    integrate, long_time_average, uniform_grid, AverageReport, Dop853, IntegratorOptions,
    OdeSystem, Trajectory,
};
pub use lyapunov::{
    fraction_regular, lyapunov_exponent, FractionRegular, LyapunovOptions, LyapunovResult,
    TangentState,
};
pub use shell::{
    energy_outer_bounds, sample_energy_shell, single_linkage_cluster_count, ShellOptions,
    ShellSample,
};

use crate::{CoreError, ModelParams, Result};
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Tolerance on the particle-number constraint at construction.
pub const CONSTRAINT_TOL: f64 = 1e-10;

/// Point on the classical phase space, `sum_k (q_k^2 + p_k^2) = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    q: Vec<f64>,
    p: Vec<f64>,
}

impl PhasePoint {
    /// Checked constructor; fails if the constraint is violated beyond
    /// [`CONSTRAINT_TOL`].
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        assert_eq!(q.len(), p.len(), "q and p must have equal length");
        let norm: f64 = q.iter().chain(p.iter()).map(|x| x * x).sum();
        let defect = (norm - 2.0).abs();
        if defect > CONSTRAINT_TOL {
            return Err(CoreError::OffConstraint(defect));
        }
        Ok(Self { q, p })
    }

    /// Rescales an arbitrary nonzero vector radially onto the sphere.
    pub fn projected(q: Vec<f64>, p: Vec<f64>) -> Self {
        let norm: f64 = q.iter().chain(p.iter()).map(|x| x * x).sum();
        let scale = (2.0 / norm).sqrt();
        Self {
            q: q.into_iter().map(|x| x * scale).collect(),
            p: p.into_iter().map(|x| x * scale).collect(),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Flat layout `[q_1..q_S, p_1..p_S]` used by the integrator.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(2 * self.q.len());
        y.extend_from_slice(&self.q);
        y.extend_from_slice(&self.p);
        y
    }

    pub fn from_flat(y: &[f64]) -> Self {
        let ns = y.len() / 2;
        Self {
            q: y[..ns].to_vec(),
            p: y[ns..].to_vec(),
        }
    }

    /// `sum_k (q_k^2 + p_k^2)`, which the flow conserves at 2.
    pub fn constraint_value(&self) -> f64 {
        self.q.iter().chain(self.p.iter()).map(|x| x * x).sum()
    }

    /// Cyclic shift of the `(q_k, p_k)` pairs by one site.
    pub fn rotated(&self) -> Self {
        let rot = |v: &[f64]| {
            let mut out = Vec::with_capacity(v.len());
            out.push(v[v.len() - 1]);
            out.extend_from_slice(&v[..v.len() - 1]);
            out
        };
        Self {
            q: rot(&self.q),
            p: rot(&self.p),
        }
    }
}

/// Intensive energy functional on flat coordinates.
pub fn classical_energy_flat(y: &[f64], params: &ModelParams) -> f64 {
    let ns = params.n_sites;
    let (q, p) = y.split_at(ns);
    let j = params.hopping;
    let u = params.interaction;
    let mut e = 0.0;
    for i in 0..ns {
        let ip = (i + 1) % ns;
        let r2 = q[i] * q[i] + p[i] * p[i];
        e += -j * (q[ip] * q[i] + p[ip] * p[i]) + 0.25 * u * r2 * r2;
    }
    e
}

/// Intensive energy `eps = H(q, p)` of a phase point.
pub fn classical_energy(x: &PhasePoint, params: &ModelParams) -> f64 {
    let y = x.to_flat();
    classical_energy_flat(&y, params)
}

/// Hamilton equations: `dq_i/dt = dH/dp_i`, `dp_i/dt = -dH/dq_i`.
pub fn hamilton_vector_field(y: &[f64], params: &ModelParams, dydt: &mut [f64]) {
    let ns = params.n_sites;
    let (q, p) = y.split_at(ns);
    let j = params.hopping;
    let u = params.interaction;
    for i in 0..ns {
        let ip = (i + 1) % ns;
        let im = (i + ns - 1) % ns;
        let r2 = q[i] * q[i] + p[i] * p[i];
        dydt[i] = -j * (p[ip] + p[im]) + u * p[i] * r2;
        dydt[ns + i] = j * (q[ip] + q[im]) - u * q[i] * r2;
    }
}

/// Product of the flow Jacobian with a deviation vector, evaluated
/// analytically. Drives the tangent dynamics of the Lyapunov computation.
pub fn tangent_field(y: &[f64], delta: &[f64], params: &ModelParams, out: &mut [f64]) {
    let ns = params.n_sites;
    let (q, p) = y.split_at(ns);
    let (dq, dp) = delta.split_at(ns);
    let j = params.hopping;
    let u = params.interaction;
    for i in 0..ns {
        let ip = (i + 1) % ns;
        let im = (i + ns - 1) % ns;
        let r2 = q[i] * q[i] + p[i] * p[i];
        // d(qdot_i) = 2U q_i p_i dq_i + U (r2 + 2 p_i^2) dp_i - J (dp_{i+1} + dp_{i-1})
        out[i] = 2.0 * u * q[i] * p[i] * dq[i] + u * (r2 + 2.0 * p[i] * p[i]) * dp[i]
            - j * (dp[ip] + dp[im]);
        // d(pdot_i) = J (dq_{i+1} + dq_{i-1}) - U (r2 + 2 q_i^2) dq_i - 2U q_i p_i dp_i
        out[ns + i] = j * (dq[ip] + dq[im])
            - u * (r2 + 2.0 * q[i] * q[i]) * dq[i]
            - 2.0 * u * q[i] * p[i] * dp[i];
    }
}

/// Classical site occupations `n_k = (q_k^2 + p_k^2)/2`; they sum to 1 on
/// the constraint sphere.
pub fn classical_occupations(x: &PhasePoint) -> Vec<f64> {
    x.q()
        .iter()
        .zip(x.p())
        .map(|(q, p)| 0.5 * (q * q + p * p))
        .collect()
}

pub fn classical_occupations_flat(y: &[f64], n_sites: usize) -> Vec<f64> {
    let (q, p) = y.split_at(n_sites);
    q.iter().zip(p).map(|(q, p)| 0.5 * (q * q + p * p)).collect()
}

/// Classical generalized imbalance `I = sum_k n_k exp(2 pi i (k-1)/S)`.
pub fn classical_imbalance(x: &PhasePoint) -> Complex64 {
    let ns = x.n_sites();
    let mut acc = Complex64::default();
    for (k, (q, p)) in x.q().iter().zip(x.p()).enumerate() {
        let nk = 0.5 * (q * q + p * p);
        acc += nk * Complex64::from_polar(1.0, TAU * k as f64 / ns as f64);
    }
    acc
}
