//! Berry-Robnik spacing distribution for mixed phase space and the
//! one-parameter regularity fit through its cumulative form.

use super::SpacingSet;
use statrs::function::erf::erfc;

/// Spacing density for a superposition of one Poissonian sequence of weight
/// `rho` and one Wigner sequence of weight `1 - rho`:
///
/// ```text
/// P(s; rho) = rho^2 e^{-rho s} erfc(sqrt(pi)/2 rb s)
///           + (2 rho rb + pi/2 rb^3 s) e^{-rho s - pi/4 rb^2 s^2},   rb = 1 - rho
/// ```
///
/// `rho = 1` is pure Poisson `e^{-s}`; `rho = 0` the Wigner surmise.
/// Panics outside the domain `s >= 0`, `0 <= rho <= 1`.
pub fn berry_robnik_pdf(s: f64, rho: f64) -> f64 {
    assert!(s >= 0.0, "spacing must be nonnegative, got {s}");
    assert!((0.0..=1.0).contains(&rho), "rho must lie in [0,1], got {rho}");
    let rb = 1.0 - rho;
    let c = 0.5 * std::f64::consts::PI.sqrt() * rb;
    rho * rho * (-rho * s).exp() * erfc(c * s)
        + (2.0 * rho * rb + 0.5 * std::f64::consts::PI * rb.powi(3) * s)
            * (-rho * s - c * c * s * s).exp()
}

/// Cumulative form of [`berry_robnik_pdf`]. The gap function of the
/// superposed sequences factorizes, which gives the closed form
/// `F(s) = 1 - rho e^{-rho s} erfc(c s) - rb e^{-rho s - c^2 s^2}`.
pub fn berry_robnik_cdf(s: f64, rho: f64) -> f64 {
    assert!(s >= 0.0, "spacing must be nonnegative, got {s}");
    assert!((0.0..=1.0).contains(&rho), "rho must lie in [0,1], got {rho}");
    let rb = 1.0 - rho;
    let c = 0.5 * std::f64::consts::PI.sqrt() * rb;
    1.0 - rho * (-rho * s).exp() * erfc(c * s) - rb * (-rho * s - c * c * s * s).exp()
}

/// Result of the regularity fit.
#[derive(Debug, Clone, Copy)]
pub struct BerryRobnikFit {
    /// Regular (Poissonian) fraction in [0, 1].
    pub rho: f64,
    /// Sup-norm misfit between the empirical and fitted CDFs.
    pub residual: f64,
    pub n_spacings: usize,
    /// Below the recommended 200-spacing sample size.
    pub low_count: bool,
    /// All spacings identical; the fit is meaningless.
    pub degenerate: bool,
}

/// Fits `rho` by least squares between the empirical CDF at the sorted
/// sample points and [`berry_robnik_cdf`], minimized over `[0, 1]` by
/// golden-section search. Deterministic: same input, same result.
pub fn fit_regularity(spacings: &SpacingSet) -> BerryRobnikFit {
    let mut s = spacings.spacings.clone();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    assert!(n >= 2, "need at least two spacings to fit");

    let degenerate = (s[n - 1] - s[0]).abs() <= 1e-12 * s[n - 1].abs().max(1.0);
    if degenerate {
        return BerryRobnikFit {
            rho: 0.0,
            residual: 1.0,
            n_spacings: n,
            low_count: n < 200,
            degenerate,
        };
    }

    let emp: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let sse = |rho: f64| -> f64 {
        s.iter()
            .zip(&emp)
            .map(|(&si, &f)| {
                let d = berry_robnik_cdf(si, rho) - f;
                d * d
            })
            .sum()
    };

    // golden-section search on the unimodal least-squares objective
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (sse(c), sse(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sse(d);
        }
    }
    let rho = 0.5 * (a + b);

    let residual = s
        .iter()
        .zip(&emp)
        .map(|(&si, &f)| (berry_robnik_cdf(si, rho) - f).abs())
        .fold(0.0, f64::max);

    BerryRobnikFit {
        rho,
        residual,
        n_spacings: n,
        low_count: n < 200,
        degenerate,
    }
}
