//! Density matrices for N-level systems and the coupling-adapted Pauli
//! triple for the two-state case.
//!
//! Two-state convention (basis order `|0⟩, |1⟩` with `|1⟩` the upper level):
//!
//! ```text
//! σx = |1⟩⟨1| − |0⟩⟨0|     (diagonal; H0 = ½ħω σx)
//! σy = |1⟩⟨0| + |0⟩⟨1|
//! σz = i(|0⟩⟨1| − |1⟩⟨0|)  (the bath-coupling coordinate, K = Q σz)
//! ```
//!
//! This is a right-handed Pauli family (`[σi, σj] = 2i εijk σk`), so the
//! usual Bloch correspondence `ρ = (I + P·σ)/2`, `P = Tr(ρσ)` holds with the
//! energy axis along x rather than the conventional z.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bloch::PolarizationVector;
use crate::{Error, Result};

/// Hermiticity / unit-trace tolerance for validated construction.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Amount by which an eigenvalue of ρ may round below zero.
pub const EIGENVALUE_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// σx in the convention above: `diag(−1, +1)`.
pub fn pauli_x() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
}

/// σy in the convention above: `[[0, 1], [1, 0]]`.
pub fn pauli_y() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

/// σz in the convention above: `[[0, i], [−i, 0]]`.
pub fn pauli_z() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)])
}

/// A validated N×N density matrix: Hermitian, unit trace, positive
/// semidefinite (up to [`EIGENVALUE_TOL`]).
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validating constructor.
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        let n = mat.nrows();
        for i in 0..n {
            for j in i..n {
                let d = (mat[(i, j)] - mat[(j, i)].conj()).norm();
                if d > HERMITICITY_TOL {
                    return Err(Error::InvalidState(format!(
                        "density matrix is not Hermitian: |ρ[{i},{j}] − ρ[{j},{i}]*| = {d:e}"
                    )));
                }
            }
        }
        let tr: Complex64 = mat.diagonal().sum();
        if (tr - c(1.0, 0.0)).norm() > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        let eigs = hermitian_eigenvalues(&mat);
        if let Some(bad) = eigs.iter().find(|&&w| w < -EIGENVALUE_TOL) {
            return Err(Error::InvalidState(format!(
                "density matrix has negative eigenvalue {bad:e}"
            )));
        }
        Ok(Self { mat })
    }

    /// Internal constructor for states generated by unitary conjugation of an
    /// already-validated matrix; skips the O(N³) eigenvalue check.
    pub(crate) fn from_trusted(mat: DMatrix<Complex64>) -> Self {
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    /// `Tr(ρ^k)` — conserved by the dynamics for every k (the flow is a
    /// unitary conjugation by the effective Hamiltonian at each instant).
    pub fn trace_power(&self, k: u32) -> f64 {
        let mut acc = DMatrix::<Complex64>::identity(self.dim(), self.dim());
        for _ in 0..k {
            acc = &acc * &self.mat;
        }
        acc.diagonal().sum().re
    }

    /// Eigenvalues of ρ (ascending).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e = hermitian_eigenvalues(&self.mat);
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }
}

/// Eigenvalues of a Hermitian matrix (unsorted).
fn hermitian_eigenvalues(mat: &DMatrix<Complex64>) -> Vec<f64> {
    mat.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect()
}

/// `ρ = (I + P·σ)/2` for a two-state polarization vector.
///
/// Accepts any `|P| ≤ 1 + PURITY_TOL`; larger norms produce a matrix with a
/// negative eigenvalue and are rejected.
pub fn bloch_to_density(p: &PolarizationVector) -> Result<DensityMatrix> {
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[
            c((1.0 - p.x) / 2.0, 0.0),
            c(p.y / 2.0, p.z / 2.0),
            c(p.y / 2.0, -p.z / 2.0),
            c((1.0 + p.x) / 2.0, 0.0),
        ],
    );
    DensityMatrix::new(m)
}

/// `P = Tr(ρσ)` for a two-state density matrix.
pub fn density_to_bloch(rho: &DensityMatrix) -> Result<PolarizationVector> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: rho.dim(),
        });
    }
    let m = rho.matrix();
    // Tr(σx ρ) = ρ11 − ρ00; Tr(σy ρ) = ρ01 + ρ10; Tr(σz ρ) = i(ρ10 − ρ01).
    let px = (m[(1, 1)] - m[(0, 0)]).re;
    let py = (m[(0, 1)] + m[(1, 0)]).re;
    let pz = (Complex64::i() * (m[(1, 0)] - m[(0, 1)])).re;
    Ok(PolarizationVector::new(px, py, pz))
}

/// Von Neumann entropy `S = −Tr(ρ ln ρ) = −Σ wᵢ ln wᵢ` (natural log),
/// with `0 ln 0 = 0`. Eigenvalues inside the tolerance band below zero are
/// clamped to 0.
pub fn vonneumann_entropy(rho: &DensityMatrix) -> f64 {
    rho.eigenvalues()
        .into_iter()
        .map(|w| if w <= 0.0 { 0.0 } else { -w * w.ln() })
        .sum()
}
