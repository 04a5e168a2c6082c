//! Spectral statistics: unfolding, spacings, Berry-Robnik fits.

mod berry_robnik;
mod scan;

pub use berry_robnik::{berry_robnik_cdf, berry_robnik_pdf, fit_regularity, BerryRobnikFit};
pub use scan::{
    reflection_labels, split_by_reflection, windowed_regularity_scan, ScanOutcome, ScanPoint,
    SkippedWindow, WindowSpec,
};

use crate::{CoreError, Result};
use ndarray::{Array1, Array2};
use ndarray_linalg::LeastSquaresSvd;

/// A spectrum mapped to unit mean level spacing.
#[derive(Debug, Clone)]
pub struct UnfoldedSpectrum {
    /// The (trimmed) raw eigenvalues the map was applied to, ascending.
    pub raw: Vec<f64>,
    /// Unfolded values, strictly increasing.
    pub unfolded: Vec<f64>,
    pub fit_degree: usize,
    pub trimmed_fraction: f64,
    /// Mean nearest-neighbor spacing after unfolding; 1 within 2% when the
    /// polynomial captured the smooth level density.
    pub mean_spacing: f64,
}

impl UnfoldedSpectrum {
    pub fn spacings(&self) -> Vec<f64> {
        self.unfolded.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UnfoldOptions {
    /// Degree of the polynomial fitted to the cumulative staircase.
    pub degree: usize,
    /// Fraction of levels discarded at each spectral edge before fitting.
    pub trim: f64,
    /// Minimum number of levels required after trimming.
    pub min_levels: usize,
}

impl Default for UnfoldOptions {
    fn default() -> Self {
        Self {
            degree: 5,
            trim: 0.02,
            min_levels: 50,
        }
    }
}

/// Nearest-neighbor spacings with a provenance label.
#[derive(Debug, Clone)]
pub struct SpacingSet {
    pub spacings: Vec<f64>,
    pub provenance: String,
}

impl SpacingSet {
    pub fn new(spacings: Vec<f64>, provenance: impl Into<String>) -> Self {
        debug_assert!(spacings.iter().all(|s| *s >= 0.0));
        Self {
            spacings,
            provenance: provenance.into(),
        }
    }
}

/// Unfolds a spectrum by fitting a degree-`degree` polynomial to the
/// cumulative staircase `(E_n, n + 1/2)` (midpoint convention) and mapping
/// each retained eigenvalue through the fit.
pub fn unfold(eigenvalues: &[f64], opts: &UnfoldOptions) -> Result<UnfoldedSpectrum> {
    let mut levels = eigenvalues.to_vec();
    levels.sort_by(|a, b| a.total_cmp(b));
    let n = levels.len();
    let cut = (opts.trim * n as f64).floor() as usize;
    let kept = n.saturating_sub(2 * cut);
    if kept < opts.min_levels {
        return Err(CoreError::TooFewLevels {
            got: kept,
            need: opts.min_levels,
        });
    }

    let raw = &levels[cut..n - cut];
    let lo = raw[0];
    let hi = raw[raw.len() - 1];
    let width = (hi - lo).max(f64::MIN_POSITIVE);
    let scaled = |e: f64| 2.0 * (e - lo) / width - 1.0;

    // least-squares fit of the staircase; global indices keep the counting
    // function consistent across the trim
    let m = raw.len();
    let cols = opts.degree + 1;
    let mut a = Array2::zeros((m, cols));
    let mut b = Array1::zeros(m);
    for (i, &e) in raw.iter().enumerate() {
        let x = scaled(e);
        let mut pw = 1.0;
        for c in 0..cols {
            a[(i, c)] = pw;
            pw *= x;
        }
        b[i] = (cut + i) as f64 + 0.5;
    }
    let coeffs = a
        .least_squares(&b)
        .map_err(|e| CoreError::Eigensolver {
            k: usize::MAX,
            msg: format!("staircase fit failed: {e}"),
        })?
        .solution;

    let eval = |e: f64| {
        let x = scaled(e);
        let mut acc = 0.0;
        let mut pw = 1.0;
        for c in 0..cols {
            acc += coeffs[c] * pw;
            pw *= x;
        }
        acc
    };

    let unfolded: Vec<f64> = raw.iter().map(|&e| eval(e)).collect();
    if unfolded.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CoreError::NonMonotoneUnfolding);
    }
    let mean_spacing = (unfolded[m - 1] - unfolded[0]) / (m - 1) as f64;

    Ok(UnfoldedSpectrum {
        raw: raw.to_vec(),
        unfolded,
        fit_degree: opts.degree,
        trimmed_fraction: opts.trim,
        mean_spacing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equally_spaced_levels_unfold_to_unit_spacing() {
        let levels: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let u = unfold(&levels, &UnfoldOptions::default()).unwrap();
        assert!((u.mean_spacing - 1.0).abs() <= 0.02);
        for s in u.spacings() {
            assert!((s - 1.0).abs() <= 0.02, "spacing {s}");
        }
    }

    #[test]
    fn degree_variation_leaves_mean_spacing_at_one() {
        // quadratically growing density
        let levels: Vec<f64> = (1..400).map(|i| (i as f64).powf(0.66)).collect();
        for degree in [4, 5, 6] {
            let u = unfold(
                &levels,
                &UnfoldOptions {
                    degree,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(
                (u.mean_spacing - 1.0).abs() <= 0.02,
                "degree {degree}: mean {}",
                u.mean_spacing
            );
        }
    }

    #[test]
    fn too_few_levels_is_an_error() {
        let levels: Vec<f64> = (0..30).map(|i| i as f64).collect();
        assert!(matches!(
            unfold(&levels, &UnfoldOptions::default()),
            Err(CoreError::TooFewLevels { .. })
        ));
    }
}
