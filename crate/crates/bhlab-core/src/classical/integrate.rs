//! Adaptive Dormand-Prince 8(5,3) integration with order-7 dense output.
//!
//! The tableau and interpolant follow Hairer's DOP853; the dual 5th/3rd
//! order error estimate keeps long conservative runs well inside the
//! drift budget at moderate step counts.

use super::dop853_tables::{A, B, C, D, E3, E5};
use super::{classical_energy_flat, hamilton_vector_field, PhasePoint};
use crate::{CoreError, ModelParams, Result};

const N_STAGES: usize = 12;
const N_EXTENDED: usize = 16;
const INTERP_POWER: usize = 7;
const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

/// Right-hand side of a first-order ODE system.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    /// Relative local error tolerance.
    pub rtol: f64,
    /// Absolute local error tolerance.
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 100_000_000,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tolerance(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }
}

struct DenseCoeffs {
    t_old: f64,
    h: f64,
    y_old: Vec<f64>,
    f: [Vec<f64>; INTERP_POWER],
}

/// One-directional adaptive stepper (t increases).
pub struct Dop853<'a, S: OdeSystem + ?Sized> {
    sys: &'a S,
    opts: IntegratorOptions,
    t: f64,
    y: Vec<f64>,
    f_now: Vec<f64>,
    h: f64,
    k: Vec<Vec<f64>>,
    y_new: Vec<f64>,
    y_stage: Vec<f64>,
    dense: Option<DenseCoeffs>,
    keep_dense: bool,
    n_accepted: usize,
    n_rejected: usize,
    step_rejected_last: bool,
}

impl<'a, S: OdeSystem + ?Sized> Dop853<'a, S> {
    pub fn new(sys: &'a S, t0: f64, y0: &[f64], opts: IntegratorOptions) -> Self {
        let n = sys.dim();
        assert_eq!(y0.len(), n);
        let mut f_now = vec![0.0; n];
        sys.rhs(t0, y0, &mut f_now);
        let h = initial_step(sys, t0, y0, &f_now, &opts);
        Self {
            sys,
            opts,
            t: t0,
            y: y0.to_vec(),
            f_now,
            h,
            k: vec![vec![0.0; n]; N_EXTENDED],
            y_new: vec![0.0; n],
            y_stage: vec![0.0; n],
            dense: None,
            keep_dense: false,
            n_accepted: 0,
            n_rejected: 0,
            step_rejected_last: false,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn steps_accepted(&self) -> usize {
        self.n_accepted
    }

    /// Replaces the state in place (e.g. tangent-vector renormalization);
    /// invalidates the dense interpolant of the previous step.
    pub fn set_state(&mut self, y: &[f64]) {
        self.y.copy_from_slice(y);
        self.sys.rhs(self.t, &self.y, &mut self.f_now);
        self.dense = None;
    }

    /// Build dense-output coefficients on every accepted step.
    pub fn keep_dense_output(&mut self, on: bool) {
        self.keep_dense = on;
    }

    /// Advances by one accepted step of at most `h_limit`.
    pub fn step(&mut self, h_limit: f64) -> Result<()> {
        let n = self.y.len();
        loop {
            if self.n_accepted + self.n_rejected >= self.opts.max_steps {
                return Err(CoreError::TooManySteps {
                    t: self.t,
                    max_steps: self.opts.max_steps,
                });
            }
            let h = self.h.min(h_limit).min(self.opts.h_max);
            if h <= self.t.abs().max(1.0) * 1e-15 {
                return Err(CoreError::StepUnderflow { t: self.t, h });
            }

            self.k[0].copy_from_slice(&self.f_now);
            for s in 1..N_STAGES {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, kj) in self.k.iter().enumerate().take(s) {
                        let a = A[s][j];
                        if a != 0.0 {
                            acc += a * kj[i];
                        }
                    }
                    self.y_stage[i] = self.y[i] + h * acc;
                }
                let t_stage = self.t + C[s] * h;
                let (head, tail) = self.k.split_at_mut(s);
                let _ = head;
                self.sys.rhs(t_stage, &self.y_stage, &mut tail[0]);
            }

            for i in 0..n {
                let mut acc = 0.0;
                for (j, b) in B.iter().enumerate() {
                    if *b != 0.0 {
                        acc += b * self.k[j][i];
                    }
                }
                self.y_new[i] = self.y[i] + h * acc;
            }
            {
                let (head, tail) = self.k.split_at_mut(N_STAGES);
                let _ = head;
                self.sys.rhs(self.t + h, &self.y_new, &mut tail[0]);
            }

            // combined 5th/3rd order error norm
            let mut err5_sq = 0.0;
            let mut err3_sq = 0.0;
            for i in 0..n {
                let sc = self.opts.atol + self.opts.rtol * self.y[i].abs().max(self.y_new[i].abs());
                let mut e5 = 0.0;
                let mut e3 = 0.0;
                for j in 0..=N_STAGES {
                    e5 += E5[j] * self.k[j][i];
                    e3 += E3[j] * self.k[j][i];
                }
                err5_sq += (e5 / sc) * (e5 / sc);
                err3_sq += (e3 / sc) * (e3 / sc);
            }
            let denom = err5_sq + 0.01 * err3_sq;
            let err_norm = if denom > 0.0 {
                h.abs() * err5_sq / (denom * n as f64).sqrt()
            } else {
                0.0
            };

            if err_norm <= 1.0 {
                let factor = if err_norm == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err_norm.powf(ERROR_EXPONENT)).min(MAX_FACTOR)
                };
                let factor = if self.step_rejected_last {
                    factor.min(1.0)
                } else {
                    factor
                };

                if self.keep_dense {
                    self.build_dense(h);
                }

                self.t += h;
                std::mem::swap(&mut self.y, &mut self.y_new);
                self.f_now.copy_from_slice(&self.k[N_STAGES]);
                self.h = (h * factor).min(self.opts.h_max);
                self.n_accepted += 1;
                self.step_rejected_last = false;
                return Ok(());
            }

            self.n_rejected += 1;
            self.step_rejected_last = true;
            self.h = h * (SAFETY * err_norm.powf(ERROR_EXPONENT)).max(MIN_FACTOR);
        }
    }

    fn build_dense(&mut self, h: f64) {
        let n = self.y.len();
        // three extra stages of the order-7 interpolant
        for s in (N_STAGES + 1)..N_EXTENDED {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in self.k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                self.y_stage[i] = self.y[i] + h * acc;
            }
            let t_stage = self.t + C[s] * h;
            let (head, tail) = self.k.split_at_mut(s);
            let _ = head;
            self.sys.rhs(t_stage, &self.y_stage, &mut tail[0]);
        }

        let mut f = [(); INTERP_POWER].map(|_| vec![0.0; n]);
        for i in 0..n {
            let delta = self.y_new[i] - self.y[i];
            f[0][i] = delta;
            f[1][i] = h * self.k[0][i] - delta;
            f[2][i] = 2.0 * delta - h * (self.k[N_STAGES][i] + self.k[0][i]);
        }
        for (r, drow) in D.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in self.k.iter().enumerate() {
                    if drow[j] != 0.0 {
                        acc += drow[j] * kj[i];
                    }
                }
                f[3 + r][i] = h * acc;
            }
        }
        self.dense = Some(DenseCoeffs {
            t_old: self.t,
            h,
            y_old: self.y.clone(),
            f,
        });
    }

    /// Evaluates the order-7 interpolant of the last accepted step.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let dense = self
            .dense
            .as_ref()
            .expect("dense output requested without keep_dense_output(true)");
        let x = (t - dense.t_old) / dense.h;
        out.fill(0.0);
        for (i, frow) in dense.f.iter().rev().enumerate() {
            for (o, fv) in out.iter_mut().zip(frow) {
                *o += fv;
            }
            let factor = if i % 2 == 0 { x } else { 1.0 - x };
            for o in out.iter_mut() {
                *o *= factor;
            }
        }
        for (o, y0) in out.iter_mut().zip(&dense.y_old) {
            *o += y0;
        }
    }

    /// Integrates up to exactly `t_target` (clipping the final step).
    pub fn advance_to(&mut self, t_target: f64) -> Result<()> {
        while self.t < t_target {
            let remaining = t_target - self.t;
            let saved_h = self.h;
            if remaining < self.h {
                self.step(remaining)?;
                self.h = saved_h; // keep step-size memory across clipped landings
            } else {
                self.step(f64::INFINITY)?;
            }
        }
        Ok(())
    }
}

fn initial_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    opts: &IntegratorOptions,
) -> f64 {
    let n = y0.len();
    let scale: Vec<f64> = y0
        .iter()
        .map(|y| opts.atol + opts.rtol * y.abs())
        .collect();
    let d0 = rms(y0, &scale);
    let d1 = rms(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let mut y1 = vec![0.0; n];
    for i in 0..n {
        y1[i] = y0[i] + h0 * f0[i];
    }
    let mut f1 = vec![0.0; n];
    sys.rhs(t0 + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff, &scale) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 8.0)
    };
    (100.0 * h0).min(h1).min(opts.h_max)
}

fn rms(v: &[f64], scale: &[f64]) -> f64 {
    let s: f64 = v
        .iter()
        .zip(scale)
        .map(|(x, sc)| (x / sc) * (x / sc))
        .sum();
    (s / v.len() as f64).sqrt()
}

/// Hamilton flow as an ODE system on flat coordinates.
pub struct HamiltonSystem<'a> {
    pub params: &'a ModelParams,
}

impl OdeSystem for HamiltonSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.params.n_sites
    }

    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        hamilton_vector_field(y, self.params, dydt);
    }
}

/// Time series of a classical trajectory with drift diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    /// max over accepted steps of |eps(t) - eps(0)| / |eps(0)|.
    pub energy_drift: f64,
    /// max over accepted steps of |sum(q^2+p^2) - 2|.
    pub constraint_drift: f64,
}

/// Integrates the Hamilton flow from `x0`, sampling the dense output at
/// `sample_times` (ascending, within `[0, t_max]`).
pub fn integrate(
    x0: &PhasePoint,
    params: &ModelParams,
    t_max: f64,
    sample_times: &[f64],
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    debug_assert!(sample_times.windows(2).all(|w| w[0] < w[1]));
    let sys = HamiltonSystem { params };
    let y0 = x0.to_flat();
    let eps0 = classical_energy_flat(&y0, params);
    let eps_scale = eps0.abs().max(1e-12);

    let mut stepper = Dop853::new(&sys, 0.0, &y0, *opts);
    stepper.keep_dense_output(true);

    let mut times = Vec::with_capacity(sample_times.len());
    let mut points = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0usize;
    while next_sample < sample_times.len() && sample_times[next_sample] <= 0.0 {
        times.push(sample_times[next_sample]);
        points.push(x0.clone());
        next_sample += 1;
    }

    let mut energy_drift = 0.0f64;
    let mut constraint_drift = 0.0f64;
    let mut interp = vec![0.0; y0.len()];

    while stepper.t() < t_max {
        stepper.step(t_max - stepper.t())?;
        let y = stepper.y();
        energy_drift =
            energy_drift.max((classical_energy_flat(y, params) - eps0).abs() / eps_scale);
        let c: f64 = y.iter().map(|v| v * v).sum();
        constraint_drift = constraint_drift.max((c - 2.0).abs());

        while next_sample < sample_times.len() && sample_times[next_sample] <= stepper.t() {
            stepper.interpolate(sample_times[next_sample], &mut interp);
            times.push(sample_times[next_sample]);
            points.push(PhasePoint::from_flat(&interp));
            next_sample += 1;
        }
    }

    Ok(Trajectory {
        times,
        points,
        energy_drift,
        constraint_drift,
    })
}

/// Uniform sample grid `0, dt, 2dt, ..., t_max` (inclusive).
pub fn uniform_grid(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt).round() as usize;
    (0..=n).map(|i| i as f64 * dt).collect()
}

/// Trapezoidal time average with running prefix averages for convergence
/// inspection.
#[derive(Debug, Clone)]
pub struct AverageReport {
    /// (1/tau) integral of the observable over the full span.
    pub value: f64,
    /// Running prefix averages at increasing horizons `(tau_k, avg over [t0, tau_k])`.
    pub windowed: Vec<(f64, f64)>,
}

pub fn long_time_average(
    trajectory: &Trajectory,
    observable: impl Fn(&PhasePoint) -> f64,
) -> AverageReport {
    let t = &trajectory.times;
    assert!(t.len() >= 2, "need at least two samples to average");
    let vals: Vec<f64> = trajectory.points.iter().map(observable).collect();

    let span = t[t.len() - 1] - t[0];
    let n_windows = 10usize;
    let mut windowed = Vec::with_capacity(n_windows);
    let mut acc = 0.0;
    let mut next_window = 1usize;
    for i in 1..t.len() {
        acc += 0.5 * (vals[i] + vals[i - 1]) * (t[i] - t[i - 1]);
        let tau = t[i] - t[0];
        while next_window <= n_windows && tau >= span * next_window as f64 / n_windows as f64 {
            windowed.push((t[i], acc / tau));
            next_window += 1;
        }
    }
    let value = acc / span;
    AverageReport { value, windowed }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(4, 35, 1.0, -10.0).unwrap()
    }

    fn fig5c_point() -> PhasePoint {
        PhasePoint::projected(
            vec![0.306, -0.948, 0.289, -0.01],
            vec![-0.58, 0.652, -0.373, 0.151],
        )
    }

    #[test]
    fn interpolant_matches_direct_integration() {
        let p = params();
        let x0 = fig5c_point();
        let opts = IntegratorOptions::default();
        let full = integrate(&x0, &p, 10.0, &[3.7, 10.0], &opts).unwrap();
        // land exactly on 3.7 via clipping instead of interpolation
        let direct = integrate(&x0, &p, 3.7, &[3.7], &opts).unwrap();
        let a = full.points[0].to_flat();
        let b = direct.points[0].to_flat();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn short_run_conserves_energy_tightly() {
        let p = params();
        let traj = integrate(
            &fig5c_point(),
            &p,
            100.0,
            &uniform_grid(100.0, 1.0),
            &IntegratorOptions::default(),
        )
        .unwrap();
        assert!(traj.energy_drift < 1e-10, "drift {}", traj.energy_drift);
        assert!(traj.constraint_drift < 1e-10);
    }

    #[test]
    fn time_reversal_roundtrip_returns_to_start() {
        let p = params();
        let x0 = fig5c_point();
        let opts = IntegratorOptions::default();
        let fwd = integrate(&x0, &p, 10.0, &[10.0], &opts).unwrap();
        let end = &fwd.points[0];
        // flip momenta, integrate the same duration, flip back
        let back_start =
            PhasePoint::from_flat(&end.to_flat().iter().enumerate().map(|(i, v)| {
                if i < 4 { *v } else { -v }
            }).collect::<Vec<_>>());
        let bwd = integrate(&back_start, &p, 10.0, &[10.0], &opts).unwrap();
        let returned = bwd.points[0].to_flat();
        let y0 = x0.to_flat();
        for i in 0..8 {
            let expect = if i < 4 { y0[i] } else { -y0[i] };
            assert!(
                (returned[i] - expect).abs() < 1e-6,
                "coord {i}: {} vs {expect}",
                returned[i]
            );
        }
    }

    #[test]
    fn average_of_constant_observable_is_the_constant() {
        let p = params();
        let traj = integrate(
            &fig5c_point(),
            &p,
            5.0,
            &uniform_grid(5.0, 0.1),
            &IntegratorOptions::default(),
        )
        .unwrap();
        let rep = long_time_average(&traj, |_| 2.5);
        assert!((rep.value - 2.5).abs() < 1e-14);
        assert!(rep.windowed.iter().all(|(_, v)| (v - 2.5).abs() < 1e-14));
    }
}
