//! Closed-form transition rates, detailed balance, the second-order
//! perturbative occupation, and the phenomenological two-level rate
//! equations.
//!
//! Two routes to the bath-induced transition rate are kept deliberately
//! separate and cross-checked in tests rather than merged:
//!
//! * **Classical-noise route**: `λ = (2/ħ²)|K_fi|²·k_BT·J(ω_fi)/ω_fi` —
//!   what the stochastic simulation realizes. Symmetric in excitation and
//!   decay (the classical field has no preferred direction).
//! * **Quantized-bath route**: `A_fi = (2/ħ)|K_fi|²·J(ω_fi)`, with
//!   `λ↑ = A_fi⟨n⟩` and `λ↓ = A_fi(⟨n⟩+1)` obeying detailed balance.
//!
//! The two coincide when `k_BT ≫ ħω_fi`; results are flagged with a
//! regime note when `k_BT < 3ħω_fi`.
//!
//! Units: Ohmic and tabulated spectral densities live in the crate's
//! reduced units (ħ = 1, energies as angular frequencies); the blackbody
//! family is CGS, with `|K_fi|` then meaning the dipole length `|r_fi|` in
//! cm (the charge is carried inside the spectral density). Feeding the
//! blackbody density through the classical-noise route reproduces the
//! Einstein absorption rate `A·⟨n⟩` *exactly* — the thermal factors cancel
//! algebraically.

use crate::consts::{kt_over_hbar, C_CM_PER_S, E_ESU, HBAR_ERG_S, KB_ERG_PER_K};
use crate::spectral::{planck_occupation, MemoryKernel, SpectralDensity};
use crate::{Error, Result};

/// Ratio k_BT/ħω below which the classical-noise rate carries a caveat.
pub const CLASSICAL_REGIME_RATIO: f64 = 3.0;

/// Both rate routes for one transition.
#[derive(Clone, Debug, PartialEq)]
pub struct RateResult {
    /// Classical-noise rate (2/ħ²)|K_fi|²k_BT·J/ω (s⁻¹).
    pub lambda_noise: f64,
    /// Spontaneous rate A_fi = (2/ħ)|K_fi|²J(ω_fi) (s⁻¹).
    pub a_spontaneous: f64,
    /// Quantized-bath excitation rate A_fi·⟨n⟩ (s⁻¹).
    pub lambda_up_q: f64,
    /// Quantized-bath decay rate A_fi·(⟨n⟩+1) (s⁻¹).
    pub lambda_down_q: f64,
    /// Mean bath occupation at ω_fi.
    pub n_bar: f64,
    /// Transition frequency |Ω_fi| (rad/s).
    pub omega_fi: f64,
    /// Set when k_BT < 3ħω_fi: the classical-noise rate then differs
    /// appreciably from the quantized-bath rates.
    pub regime_note: Option<String>,
}

fn validate_omega_fi(omega_fi: f64) -> Result<f64> {
    if !omega_fi.is_finite() || omega_fi == 0.0 {
        return Err(Error::InvalidParameter {
            name: "omega_fi",
            message: format!("transition frequency must be finite and nonzero, got {omega_fi}"),
        });
    }
    // Only |Ω_fi| matters: excitation and decay are symmetric here.
    Ok(omega_fi.abs())
}

fn validate_temperature(temperature_k: f64) -> Result<()> {
    if !temperature_k.is_finite() || temperature_k < 0.0 {
        return Err(Error::InvalidParameter {
            name: "temperature_k",
            message: format!("temperature must be finite and ≥ 0, got {temperature_k}"),
        });
    }
    Ok(())
}

/// Classical-noise transition rate `(2/ħ²)|K_fi|²·k_BT·J(ω_fi)/ω_fi`.
///
/// For the blackbody density pass the same temperature here and in the
/// density; `k_fi` is then the dipole length in cm.
pub fn rate_noise(
    k_fi: f64,
    temperature_k: f64,
    sd: &SpectralDensity,
    omega_fi: f64,
) -> Result<f64> {
    let omega_fi = validate_omega_fi(omega_fi)?;
    validate_temperature(temperature_k)?;
    let j_over_w = sd.j_over_omega(omega_fi)?;
    Ok(match sd {
        SpectralDensity::Blackbody { .. } => {
            2.0 / (HBAR_ERG_S * HBAR_ERG_S)
                * k_fi
                * k_fi
                * (KB_ERG_PER_K * temperature_k)
                * j_over_w
        }
        _ => 2.0 * k_fi * k_fi * kt_over_hbar(temperature_k) * j_over_w,
    })
}

/// Ohmic special case `λ = 2α·k_BT/ħ` (unit coupling element absorbed).
pub fn rate_ohmic(alpha: f64, temperature_k: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidParameter {
            name: "alpha",
            message: format!("dimensionless friction must be finite and ≥ 0, got {alpha}"),
        });
    }
    validate_temperature(temperature_k)?;
    Ok(2.0 * alpha * kt_over_hbar(temperature_k))
}

/// Quantized-bath rates together with the classical-noise rate for the
/// same transition.
pub fn rates_quantized(
    k_fi: f64,
    sd: &SpectralDensity,
    omega_fi: f64,
    temperature_k: f64,
) -> Result<RateResult> {
    let omega_fi = validate_omega_fi(omega_fi)?;
    validate_temperature(temperature_k)?;
    let j = sd.evaluate(omega_fi)?;
    let a_spontaneous = match sd {
        SpectralDensity::Blackbody { .. } => 2.0 / HBAR_ERG_S * k_fi * k_fi * j,
        _ => 2.0 * k_fi * k_fi * j,
    };
    let n_bar = planck_occupation(omega_fi, temperature_k)?;
    let lambda_noise = rate_noise(k_fi, temperature_k, sd, omega_fi)?;
    let classical_ok =
        temperature_k > 0.0 && kt_over_hbar(temperature_k) >= CLASSICAL_REGIME_RATIO * omega_fi;
    Ok(RateResult {
        lambda_noise,
        a_spontaneous,
        lambda_up_q: a_spontaneous * n_bar,
        lambda_down_q: a_spontaneous * (n_bar + 1.0),
        n_bar,
        omega_fi,
        regime_note: if classical_ok {
            None
        } else {
            Some(format!(
                "k_BT < {CLASSICAL_REGIME_RATIO}ħω_fi: quantized-bath corrections to the \
                 classical-noise rate are not small"
            ))
        },
    })
}

/// Spontaneous-emission coefficient of a charge-e dipole,
/// `A = (4e²/3ħc³)|r_fi|²ω³` (CGS: r in cm, result in s⁻¹).
pub fn einstein_a(r_fi_cm: f64, omega_fi: f64) -> Result<f64> {
    let omega_fi = validate_omega_fi(omega_fi)?;
    if !r_fi_cm.is_finite() {
        return Err(Error::InvalidParameter {
            name: "r_fi_cm",
            message: "dipole matrix element must be finite".into(),
        });
    }
    Ok(4.0 * E_ESU * E_ESU * r_fi_cm * r_fi_cm * omega_fi.powi(3)
        / (3.0 * HBAR_ERG_S * C_CM_PER_S.powi(3)))
}

/// Second-order occupation of the target level at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OccupationEstimate {
    pub value: f64,
    /// Set when the estimate exceeds 1: second-order perturbation theory
    /// has broken down (the value is reported anyway).
    pub perturbative_breakdown: bool,
}

/// Default outer/inner quadrature resolution; a doubled grid provides the
/// Richardson correction.
const OCCUPATION_GRID: usize = 2000;

/// Second-order occupation
/// `v_f(t) = (2k_BT|K_fi|²/ħ²)·∫₀ᵗ dt₁ ∫₀^{t₁} Γ(t₁−t₂)cos[Ω_fi(t₁−t₂)] dt₂`
/// (reduced units: the kernel in rad/s², temperatures via k_BT/ħ).
///
/// Delta kernels integrate exactly to `λ·t` (the retarded delta carries
/// half its weight). Sampled kernels use nested trapezoidal quadrature on
/// a 2000-point grid, Richardson-corrected against a 4000-point pass.
pub fn perturbative_occupation(
    t: f64,
    kernel: &MemoryKernel,
    k_fi: f64,
    omega_fi: f64,
    temperature_k: f64,
) -> Result<OccupationEstimate> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter {
            name: "t",
            message: format!("time must be finite and ≥ 0, got {t}"),
        });
    }
    validate_temperature(temperature_k)?;
    let prefactor = 2.0 * k_fi * k_fi * kt_over_hbar(temperature_k);
    let value = match kernel {
        MemoryKernel::Delta { weight } => prefactor * (weight / 2.0) * t,
        MemoryKernel::Sampled { .. } => {
            if t == 0.0 {
                0.0
            } else {
                let coarse = nested_cos_quadrature(kernel, omega_fi, t, OCCUPATION_GRID)?;
                let fine = nested_cos_quadrature(kernel, omega_fi, t, 2 * OCCUPATION_GRID)?;
                prefactor * (fine + (fine - coarse) / 3.0)
            }
        }
    };
    Ok(OccupationEstimate {
        value,
        perturbative_breakdown: value > 1.0,
    })
}

/// `∫₀ᵗ dt₁ ∫₀^{t₁} Γ(τ)cos(Ωτ) dτ dt₁` by cumulative trapezoids on a
/// uniform grid of `n` panels.
fn nested_cos_quadrature(kernel: &MemoryKernel, omega: f64, t: f64, n: usize) -> Result<f64> {
    let h = t / n as f64;
    let mut inner = 0.0; // running ∫₀^{t₁} Γcos
    let mut outer = 0.0; // running ∫₀ᵗ inner
    let mut f_prev = kernel.at(0.0)?; // cos(0) = 1
    let mut g_prev = 0.0;
    for i in 1..=n {
        let tau = i as f64 * h;
        let f = kernel.at(tau)? * (omega * tau).cos();
        inner += 0.5 * (f_prev + f) * h;
        outer += 0.5 * (g_prev + inner) * h;
        f_prev = f;
        g_prev = inner;
    }
    Ok(outer)
}

/// Closed-form solution of the two-level rate equations
/// `v̇₁ = −λ↓v₁ + λ↑v₀`, `v₀ + v₁ = 1`, returning `(v₀, v₁)` at time `t`.
pub fn phenomenological_occupations(
    t: f64,
    lambda_up: f64,
    lambda_down: f64,
    v1_0: f64,
) -> Result<(f64, f64)> {
    for (name, r) in [("lambda_up", lambda_up), ("lambda_down", lambda_down)] {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidParameter {
                name,
                message: format!("rate must be finite and ≥ 0, got {r}"),
            });
        }
    }
    if !(0.0..=1.0).contains(&v1_0) {
        return Err(Error::InvalidParameter {
            name: "v1_0",
            message: format!("initial occupation must lie in [0, 1], got {v1_0}"),
        });
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter {
            name: "t",
            message: format!("time must be finite and ≥ 0, got {t}"),
        });
    }
    let s = lambda_up + lambda_down;
    let v1 = if s == 0.0 {
        v1_0
    } else {
        let v1_inf = lambda_up / s;
        v1_inf + (v1_0 - v1_inf) * (-s * t).exp()
    };
    Ok((1.0 - v1, v1))
}
