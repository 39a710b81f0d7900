//! Physical constants and unit conversions.
//!
//! The simulator works internally with ħ = 1: energies are angular
//! frequencies (rad/s) and times are seconds. The eV-flavoured constants
//! convert user-facing quantities (level splittings in eV, temperatures in
//! kelvin) at the API boundary. The Gaussian-unit constants (esu, erg, cm)
//! serve the radiative/blackbody branch, where the dipole coupling is
//! conventionally written in CGS form.

/// Reduced Planck constant (eV·s).
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;

/// Boltzmann constant (eV/K).
pub const KB_EV_PER_K: f64 = 8.617_333_262e-5;

/// Speed of light (cm/s). The radiative branch works in Gaussian units.
pub const C_CM_PER_S: f64 = 2.997_924_58e10;

/// Reduced Planck constant (erg·s).
pub const HBAR_ERG_S: f64 = 1.054_571_817e-27;

/// Boltzmann constant (erg/K).
pub const KB_ERG_PER_K: f64 = 1.380_649e-16;

/// Elementary charge (esu = statC).
pub const E_ESU: f64 = 4.803_204_712e-10;

/// kB·T/ħ in rad/s for a temperature in kelvin: the thermal energy expressed
/// as an angular frequency.
pub fn kt_over_hbar(temperature_k: f64) -> f64 {
    KB_EV_PER_K * temperature_k / HBAR_EV_S
}

/// ħω/kB·T: the dimensionless level-splitting-to-thermal-energy ratio.
pub fn hw_over_kt(omega: f64, temperature_k: f64) -> f64 {
    HBAR_EV_S * omega / (KB_EV_PER_K * temperature_k)
}
