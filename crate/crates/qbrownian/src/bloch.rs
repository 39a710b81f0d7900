//! Polarization-vector (Bloch-vector) kinematics for the two-state system.
//!
//! A two-state density operator is parametrized as `ρ = (I + P·σ)/2`; the
//! eigenvalues of `ρ` are `w± = (1 ± |P|)/2`, so `|P| = 1` is a pure state
//! and `|P| = 0` the maximally mixed one. The mixing entropy
//! `S = −w₊ ln w₊ − w₋ ln w₋` measures decoherence of the ensemble-averaged
//! polarization.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on `|P| − 1` accepted as "pure" (also the slack allowed above
/// `|P| = 1` before a state is rejected as unphysical).
pub const PURITY_TOL: f64 = 1e-9;

/// Polarization vector `P = Tr(ρ σ)` of a two-state density operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizationVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PolarizationVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Pure state at polar angle `phi` in the x-z plane: `(cos φ, 0, sin φ)`.
    /// `φ = 0` is the upper energy eigenstate, `φ = π/2` an equal-weight
    /// superposition.
    pub fn from_phase(phi: f64) -> Self {
        Self::new(phi.cos(), 0.0, phi.sin())
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// True when all components are finite.
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Mixing entropy of the eigenvalue pair `w± = (1 ± |P|)/2` (dimensionless,
/// natural log). `|P| = 1` gives 0, `|P| = 0` gives `ln 2`.
///
/// Rejects `|P| > 1 + PURITY_TOL`; values within the tolerance band above 1
/// (rounding noise on pure states) are treated as exactly pure.
pub fn entropy_of_polarization(p: &PolarizationVector) -> Result<f64> {
    let norm = p.norm();
    if !norm.is_finite() || norm > 1.0 + PURITY_TOL {
        return Err(Error::InvalidState(format!(
            "polarization norm {norm:e} exceeds 1 + {PURITY_TOL:e}"
        )));
    }
    let norm = norm.min(1.0);
    let w0 = (1.0 + norm) / 2.0;
    let w1 = (1.0 - norm) / 2.0;
    Ok(-xlnx(w0) - xlnx(w1))
}

/// `x ln x` with the continuous extension `0 ln 0 = 0`.
fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}
