//! Seed-deterministic Gaussian noise for the stochastic effective field.
//!
//! The bath enters each integration step through one Gaussian deviate held
//! constant across the step. Its standard deviation is fixed by the
//! discrete fluctuation–dissipation requirement `⟨ξ(t_j)ξ(t_k)⟩ =
//! 2k_BTγ δ_{jk}/dt`; expressed as the effective precession field
//! `η = 2Qξ/ħ` with the coupling scale absorbed (Q = 1, γ = α) this is
//!
//! ```text
//! σ_η = √(8 α (k_BT/ħ) / dt)      [rad/s]
//! ```
//!
//! Streams are keyed by `(master_seed, trajectory_index)` using a
//! counter-based generator (ChaCha8), so every trajectory draws an
//! independent, reproducible sequence regardless of scheduling order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::params::SystemParams;

/// Master seed used when none is configured.
pub const DEFAULT_MASTER_SEED: u64 = 42;

/// Per-step standard deviation of the effective field, `√(8α(k_BT/ħ)/dt)`.
pub fn effective_field_sigma(params: &SystemParams) -> f64 {
    (8.0 * params.alpha * params.kt_over_hbar() / params.dt).sqrt()
}

/// A reproducible Gaussian noise stream for one trajectory.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    sigma: f64,
    master_seed: u64,
    trajectory_index: u64,
    cursor: u64,
}

impl NoiseStream {
    /// Stream for `trajectory_index` under `master_seed`, emitting samples
    /// with standard deviation `sigma`.
    pub fn new(master_seed: u64, trajectory_index: u64, sigma: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(trajectory_index);
        Self {
            rng,
            sigma,
            master_seed,
            trajectory_index,
            cursor: 0,
        }
    }

    /// Stream whose sigma satisfies the discrete fluctuation–dissipation
    /// relation for `params`.
    pub fn for_params(master_seed: u64, trajectory_index: u64, params: &SystemParams) -> Self {
        Self::new(master_seed, trajectory_index, effective_field_sigma(params))
    }

    /// Next effective-field sample `σ_η·R`, `R ~ N(0,1)`. One sample is
    /// consumed per integration step; the value is held constant across all
    /// sub-stages of that step.
    pub fn next_sample(&mut self) -> f64 {
        self.cursor += 1;
        let r: f64 = self.rng.sample(StandardNormal);
        self.sigma * r
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn trajectory_index(&self) -> u64 {
        self.trajectory_index
    }

    /// Number of samples drawn so far.
    pub fn cursor(&self) -> u64 {
        self.cursor
    }
}
