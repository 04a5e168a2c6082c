use crate::{CoreError, Result};

/// Parameters of the N-site Bose-Hubbard ring with periodic boundaries.
///
/// The interaction enters the Hamiltonian as `U/N`, which keeps the
/// energy per particle `eps = E/N` finite in the large-`N` limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Number of lattice sites (>= 2).
    pub n_sites: usize,
    /// Total number of bosons (>= 1).
    pub n_particles: usize,
    /// Hopping amplitude J.
    pub hopping: f64,
    /// Interaction strength U.
    pub interaction: f64,
}

impl ModelParams {
    pub const DEFAULT_SITES: usize = 4;
    pub const DEFAULT_HOPPING: f64 = 1.0;
    pub const DEFAULT_INTERACTION: f64 = -10.0;

    pub fn new(n_sites: usize, n_particles: usize, hopping: f64, interaction: f64) -> Result<Self> {
        if n_sites < 2 {
            return Err(CoreError::InvalidParams(format!(
                "n_sites must be >= 2, got {n_sites}"
            )));
        }
        if n_particles < 1 {
            return Err(CoreError::InvalidParams(format!(
                "n_particles must be >= 1, got {n_particles}"
            )));
        }
        if !hopping.is_finite() || !interaction.is_finite() {
            return Err(CoreError::InvalidParams(
                "hopping and interaction must be finite".into(),
            ));
        }
        Ok(Self {
            n_sites,
            n_particles,
            hopping,
            interaction,
        })
    }

    /// Four-site ring at J = 1, U = -10 with `n` particles.
    pub fn four_site(n: usize) -> Result<Self> {
        Self::new(
            Self::DEFAULT_SITES,
            n,
            Self::DEFAULT_HOPPING,
            Self::DEFAULT_INTERACTION,
        )
    }

    /// Extensive eigenvalue to the intensive scale eps = E/N.
    pub fn intensive(&self, energy: f64) -> f64 {
        energy / self.n_particles as f64
    }
}
