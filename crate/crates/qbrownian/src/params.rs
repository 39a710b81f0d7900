//! Two-state system parameters.
//!
//! The model Hamiltonian is `H0 = (Δ/2) σx` with splitting `Δ = ħω`, and the
//! bath couples through `K = Q σz`. The coordinate scale `Q` and the Ohmic
//! damping constant `γ` only ever enter through the dimensionless
//! combination `α = γ Q²/ħ`, so the parameter set absorbs `Q` (internally
//! `Q = 1`, `γ = α`).

use serde::{Deserialize, Serialize};

use crate::consts;
use crate::{Error, Result};

/// Physical parameters of a two-state system in an Ohmic bath.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Level splitting as an angular frequency, ω = Δ/ħ (rad/s).
    pub omega: f64,
    /// Dimensionless friction strength α = γQ²/ħ.
    pub alpha: f64,
    /// Bath temperature (K).
    pub temperature: f64,
    /// Integration time step (s).
    pub dt: f64,
}

impl SystemParams {
    /// Validated constructor. Requires ω > 0, α ≥ 0, T ≥ 0, dt > 0 and all
    /// entries finite.
    pub fn new(omega: f64, alpha: f64, temperature: f64, dt: f64) -> Result<Self> {
        let check = |name: &'static str, v: f64, ok: bool| -> Result<()> {
            if !v.is_finite() || !ok {
                return Err(Error::InvalidParameter {
                    name,
                    message: format!("got {v:e}"),
                });
            }
            Ok(())
        };
        check("omega", omega, omega > 0.0)?;
        check("alpha", alpha, alpha >= 0.0)?;
        check("temperature", temperature, temperature >= 0.0)?;
        check("dt", dt, dt > 0.0)?;
        Ok(Self {
            omega,
            alpha,
            temperature,
            dt,
        })
    }

    /// The reference parameter set used throughout the bundled experiments:
    /// ω = 3×10⁷ rad/s (Δ ≈ 19.75 neV), α = 10⁻⁴, T = 1 mK, dt = 0.658 ns.
    pub fn reference() -> Self {
        Self {
            omega: 3.0e7,
            alpha: 1e-4,
            temperature: 1e-3,
            dt: 0.658e-9,
        }
    }

    /// Level splitting Δ = ħω in eV.
    pub fn delta_ev(&self) -> f64 {
        consts::HBAR_EV_S * self.omega
    }

    /// Thermal energy as an angular frequency, kB·T/ħ (rad/s).
    pub fn kt_over_hbar(&self) -> f64 {
        consts::kt_over_hbar(self.temperature)
    }

    /// Golden-rule coefficient `A_fi = 2αω` (1/s): the spontaneous-decay
    /// scale of the quantized-bath rates, and the decay rate of the
    /// dissipated-energy asymptote.
    pub fn a_fi(&self) -> f64 {
        2.0 * self.alpha * self.omega
    }

    /// Classical white-noise transition rate `λ = 2α kB T/ħ` (1/s).
    pub fn lambda(&self) -> f64 {
        2.0 * self.alpha * self.kt_over_hbar()
    }

    /// Number of integration steps needed to cover `t_max`.
    pub fn steps_for(&self, t_max: f64) -> usize {
        (t_max / self.dt).ceil() as usize
    }
}
