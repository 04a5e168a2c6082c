use thiserror::Error;

/// Errors surfaced by the computational modules.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("basis dimension {dim} exceeds the configured maximum {max}")]
    Capacity { dim: usize, max: usize },

    #[error("site index {site} out of range 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("operator declared rotation-symmetric but [O, R] != 0 (max deviation {0:.3e})")]
    NotRotationInvariant(f64),

    #[error("operator block for sector k={k} is not Hermitian (defect {defect:.3e})")]
    NotHermitian { k: usize, defect: f64 },

    #[error("eigensolver failed on sector k={k}: {msg}")]
    Eigensolver { k: usize, msg: String },

    #[error("phase point violates the constraint sum(q^2+p^2)=2 by {0:.3e}")]
    OffConstraint(f64),

    #[error("step size underflow at t={t:.6e} (h={h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {max_steps} steps at t={t:.6e}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("energy {eps} outside the attainable range [{min}, {max}]")]
    EnergyOutOfRange { eps: f64, min: f64, max: f64 },

    #[error("energy-shell sampling got {accepted}/{requested} points after {attempts} draws")]
    ShellSampling {
        accepted: usize,
        requested: usize,
        attempts: u64,
    },

    #[error("critical-point search converged to no solutions")]
    NoCriticalPoints,

    #[error("too few levels for unfolding: {got} < {need}")]
    TooFewLevels { got: usize, need: usize },

    #[error("fitted cumulative density is not monotone over the sample")]
    NonMonotoneUnfolding,

    #[error("reflection expectation {value:.6} of level {level} is not within 1e-6 of +/-1")]
    AmbiguousReflection { level: usize, value: f64 },

    #[error("missing sector k={0} in the eigensystem set")]
    MissingSector(usize),

    #[error("{failed} of {total} ensemble trajectories failed (limit {limit})")]
    EnsembleFailure {
        failed: usize,
        total: usize,
        limit: usize,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;
