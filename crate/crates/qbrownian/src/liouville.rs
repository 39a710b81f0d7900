//! General N-level stochastic non-linear dynamics of the density matrix.
//!
//! The density matrix evolves under (ħ = 1)
//!
//! ```text
//! i ∂ρ/∂t = [H₀ − K·(ξ(t) + f_ρ(t)), ρ]
//! f_ρ(t)  = −∫₀ᵗ Γ(t−t′) Q̇_ρ(t′) dt′,      Q_ρ = Tr(Kρ)
//! ```
//!
//! Each step conjugates ρ with the exact exponential of the frozen
//! effective Hamiltonian, so unit trace, Hermiticity and the whole purity
//! spectrum Tr(ρᵏ) are conserved structurally (to rounding), not merely to
//! integrator order.
//!
//! Friction:
//! * **Delta kernels** (`Γ = 2γδ`): `f = −γ·Q̇` with the *instantaneous*
//!   rate `Q̇ = Im Tr(K[H₀, ρ])` (the K-part of the commutator drops out of
//!   the trace identically). At N = 2 this makes the step algebraically
//!   identical to the polarization-vector rotation in [`crate::tss`], which
//!   freezes the friction field at the step's initial transverse
//!   polarization — a lagged finite-difference here would decohere the two
//!   integrators at the 10⁻³ level over 10⁵ steps.
//! * **Sampled kernels**: retarded trapezoidal convolution of the recorded
//!   `Q_ρ` history with backward-difference rates ([`friction_force`]).

use std::collections::VecDeque;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::density::DensityMatrix;
use crate::params::SystemParams;
use crate::spectral::MemoryKernel;
use crate::{Error, Result};

/// Largest supported Hilbert-space dimension (dense matrices).
pub const MAX_DIM: usize = 16;

/// Hermiticity tolerance for operators supplied to the integrator.
const OPERATOR_HERMITICITY_TOL: f64 = 1e-12;

/// `Q_ρ = Tr(Kρ)` (real by Hermiticity of both factors).
pub fn q_expectation(k: &DMatrix<Complex64>, rho: &DensityMatrix) -> Result<f64> {
    if k.nrows() != rho.dim() || k.ncols() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: k.nrows(),
        });
    }
    let m = rho.matrix();
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..k.nrows() {
        for j in 0..k.ncols() {
            tr += k[(i, j)] * m[(j, i)];
        }
    }
    Ok(tr.re)
}

/// Retarded friction force from a uniformly spaced `Q_ρ` history
/// (oldest first, newest last, spacing `dt`):
///
/// * Delta kernel `Γ = w·δ`: `f = −(w/2)·Q̇` with `Q̇` by backward
///   difference over the two newest entries (the retarded integral sees
///   only half the delta's weight).
/// * Sampled kernel: trapezoidal convolution
///   `f(tₙ) = −Σⱼ wⱼ·Γ(tₙ−tⱼ)·Q̇ⱼ·dt` over the backward-difference nodes
///   j = 1..n, half weights at both ends.
///
/// At least two history entries are required.
pub fn friction_force(history: &[f64], kernel: &MemoryKernel, dt: f64) -> Result<f64> {
    if history.len() < 2 {
        return Err(Error::InsufficientHistory(history.len()));
    }
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "dt",
            message: format!("time step must be > 0, got {dt}"),
        });
    }
    let n = history.len() - 1;
    match kernel {
        MemoryKernel::Delta { weight } => {
            let q_dot = (history[n] - history[n - 1]) / dt;
            Ok(-(weight / 2.0) * q_dot)
        }
        MemoryKernel::Sampled { .. } => {
            let mut acc = 0.0;
            for j in 1..=n {
                let q_dot = (history[j] - history[j - 1]) / dt;
                let tau = (n - j) as f64 * dt;
                // Trapezoid over nodes 1..n; a single node degenerates to
                // a rectangle.
                let weight = if n == 1 {
                    1.0
                } else if j == 1 || j == n {
                    0.5
                } else {
                    1.0
                };
                acc += weight * kernel.at(tau)? * q_dot;
            }
            Ok(-acc * dt)
        }
    }
}

/// One N-level system with its coupling operator, memory kernel and the
/// retarded `Q_ρ` history needed by the friction convolution.
#[derive(Clone, Debug)]
pub struct LiouvilleSystem {
    h0: DMatrix<Complex64>,
    k: DMatrix<Complex64>,
    kernel: MemoryKernel,
    history: VecDeque<f64>,
    history_cap: usize,
    dt: f64,
    steps: usize,
    last_friction: Option<f64>,
}

impl LiouvilleSystem {
    /// Validating constructor: square operators of equal dimension
    /// ≤ [`MAX_DIM`], Hermitian within 1e-12, positive time step.
    pub fn new(
        h0: DMatrix<Complex64>,
        k: DMatrix<Complex64>,
        kernel: MemoryKernel,
        dt: f64,
    ) -> Result<Self> {
        if h0.nrows() != h0.ncols() {
            return Err(Error::DimensionMismatch {
                expected: h0.nrows(),
                found: h0.ncols(),
            });
        }
        if k.nrows() != h0.nrows() || k.ncols() != h0.ncols() {
            return Err(Error::DimensionMismatch {
                expected: h0.nrows(),
                found: k.nrows(),
            });
        }
        let n = h0.nrows();
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidParameter {
                name: "dimension",
                message: format!("dimension must be in 1..={MAX_DIM}, got {n}"),
            });
        }
        for (name, op) in [("h0", &h0), ("k", &k)] {
            let dev = (op - op.adjoint()).norm();
            if dev > OPERATOR_HERMITICITY_TOL {
                return Err(Error::InvalidParameter {
                    name,
                    message: format!("operator must be Hermitian, |A − A†| = {dev:e}"),
                });
            }
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "dt",
                message: format!("time step must be finite and > 0, got {dt}"),
            });
        }
        let history_cap = match &kernel {
            MemoryKernel::Delta { .. } => 2,
            MemoryKernel::Sampled { .. } => {
                let cap = (5.0 * kernel.width() / dt).ceil() as usize;
                cap.clamp(2, 1 << 22)
            }
        };
        Ok(Self {
            h0,
            k,
            kernel,
            history: VecDeque::with_capacity(history_cap),
            history_cap,
            dt,
            steps: 0,
            last_friction: None,
        })
    }

    /// The two-state system in the coupling-adapted basis:
    /// `H₀ = (ω/2)σx`, `K = σz`, Ohmic delta kernel of weight 2α.
    ///
    /// Note the noise convention: this integrator takes the bath force ξ,
    /// while the polarization picture uses the effective field η = 2ξ. To
    /// drive both with the same stream, pass `eta` to [`crate::tss::step`]
    /// and `eta/2` to [`Self::step_density`].
    pub fn two_state(params: &SystemParams) -> Result<Self> {
        let h0 = crate::density::pauli_x().map(|v| v * Complex64::new(params.omega / 2.0, 0.0));
        let k = crate::density::pauli_z();
        let kernel = MemoryKernel::Delta {
            weight: 2.0 * params.alpha,
        };
        Self::new(h0, k, kernel, params.dt)
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn kernel(&self) -> &MemoryKernel {
        &self.kernel
    }

    pub fn h0(&self) -> &DMatrix<Complex64> {
        &self.h0
    }

    pub fn coupling(&self) -> &DMatrix<Complex64> {
        &self.k
    }

    /// Recorded `Q_ρ` history (oldest first).
    pub fn history(&self) -> (&[f64], &[f64]) {
        self.history.as_slices()
    }

    /// Friction force used by the most recent step, if any.
    pub fn last_friction(&self) -> Option<f64> {
        self.last_friction
    }

    /// Instantaneous `Q̇_ρ = Im Tr(K[H₀, ρ])`. The coupling part of the
    /// effective Hamiltonian never contributes: Tr(K[K, ρ]) ≡ 0.
    pub fn q_rate(&self, rho: &DensityMatrix) -> Result<f64> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        let m = rho.matrix();
        let comm = &self.h0 * m - m * &self.h0;
        let mut tr = Complex64::new(0.0, 0.0);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                tr += self.k[(i, j)] * comm[(j, i)];
            }
        }
        Ok(tr.im)
    }

    /// Advances ρ by one step under the frozen bath force `xi`:
    /// `ρ′ = U ρ U†` with `U = exp(−i·H_eff·dt)`,
    /// `H_eff = H₀ − K(ξ + f_ρ)`, computed by eigen-decomposition of the
    /// Hermitian `H_eff`. Appends the new `Q_ρ` to the history.
    pub fn step_density(&mut self, rho: &DensityMatrix, xi: f64) -> Result<DensityMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        if self.history.is_empty() {
            self.history.push_back(q_expectation(&self.k, rho)?);
        }
        let friction = match &self.kernel {
            MemoryKernel::Delta { weight } => -(weight / 2.0) * self.q_rate(rho)?,
            MemoryKernel::Sampled { .. } => {
                if self.history.len() < 2 {
                    0.0 // no retarded information yet
                } else {
                    let hist: Vec<f64> = self.history.iter().copied().collect();
                    friction_force(&hist, &self.kernel, self.dt)?
                }
            }
        };
        self.last_friction = Some(friction);

        let shift = Complex64::new(xi + friction, 0.0);
        let h_eff = &self.h0 - self.k.map(|v| v * shift);
        let eig = h_eff.symmetric_eigen();
        // U = V·diag(e^{−iλdt})·V†
        let mut vd = eig.eigenvectors.clone();
        for (j, lam) in eig.eigenvalues.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -lam * self.dt);
            for i in 0..vd.nrows() {
                vd[(i, j)] *= phase;
            }
        }
        let u = &vd * eig.eigenvectors.adjoint();
        let next = &u * rho.matrix() * u.adjoint();
        if next.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidState(format!(
                "non-finite density matrix after step {}",
                self.steps + 1
            )));
        }
        let next = DensityMatrix::from_trusted(next);
        if self.history.len() == self.history_cap {
            self.history.pop_front();
        }
        self.history.push_back(q_expectation(&self.k, &next)?);
        self.steps += 1;
        Ok(next)
    }

    /// Energy dissipation rate of the friction force for Ohmic (delta)
    /// kernels, `γ·|Tr(ρ[H₀,K])|²` (ħ = 1). Errors for other kernels,
    /// which have no instantaneous closed form.
    pub fn dissipated_power(&self, rho: &DensityMatrix) -> Result<f64> {
        match &self.kernel {
            MemoryKernel::Delta { weight } => Ok(dissipated_power_general(
                rho,
                &self.h0,
                &self.k,
                weight / 2.0,
            )),
            MemoryKernel::Sampled { .. } => Err(Error::InvalidState(
                "instantaneous dissipated power is defined for delta (Ohmic) kernels only".into(),
            )),
        }
    }
}

/// `γ·|Tr(ρ[H₀,K])|²`: energy drained per unit time by the friction force
/// `f = −γQ̇` (ħ = 1 units; γ is the delta-kernel half-weight).
pub fn dissipated_power_general(
    rho: &DensityMatrix,
    h0: &DMatrix<Complex64>,
    k: &DMatrix<Complex64>,
    gamma: f64,
) -> f64 {
    let m = rho.matrix();
    let comm = h0 * k - k * h0;
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            tr += m[(i, j)] * comm[(j, i)];
        }
    }
    gamma * tr.norm_sqr()
}

/// Parses an operator from the small text format: a dimension line, then
/// N² row-major complex entries `re,im` separated by whitespace (newlines
/// allowed anywhere); `#` starts a comment.
pub fn parse_operator(text: &str) -> Result<DMatrix<Complex64>> {
    let mut tokens: Vec<(usize, &str)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            tokens.push((idx + 1, tok));
        }
    }
    let mut it = tokens.into_iter();
    let (dim_line, dim_tok) = it.next().ok_or(Error::Parse {
        line: 1,
        message: "empty operator file: expected a dimension line".into(),
    })?;
    let n: usize = dim_tok.parse().map_err(|_| Error::Parse {
        line: dim_line,
        message: format!("cannot parse dimension {dim_tok:?}"),
    })?;
    if n == 0 || n > MAX_DIM {
        return Err(Error::Parse {
            line: dim_line,
            message: format!("dimension must be in 1..={MAX_DIM}, got {n}"),
        });
    }
    let mut entries = Vec::with_capacity(n * n);
    let mut last_line = dim_line;
    for (line, tok) in it {
        last_line = line;
        if entries.len() == n * n {
            return Err(Error::Parse {
                line,
                message: format!("unexpected trailing entry {tok:?} after {} values", n * n),
            });
        }
        let (re_s, im_s) = tok.split_once(',').ok_or(Error::Parse {
            line,
            message: format!("entry {tok:?} is not of the form re,im"),
        })?;
        let re: f64 = re_s.parse().map_err(|_| Error::Parse {
            line,
            message: format!("cannot parse real part {re_s:?}"),
        })?;
        let im: f64 = im_s.parse().map_err(|_| Error::Parse {
            line,
            message: format!("cannot parse imaginary part {im_s:?}"),
        })?;
        entries.push(Complex64::new(re, im));
    }
    if entries.len() != n * n {
        return Err(Error::Parse {
            line: last_line,
            message: format!(
                "expected {} entries for dimension {n}, found {}",
                n * n,
                entries.len()
            ),
        });
    }
    Ok(DMatrix::from_row_slice(n, n, &entries))
}

/// Loads an operator from a file in the [`parse_operator`] text format.
pub fn load_operator(path: &Path) -> Result<DMatrix<Complex64>> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    parse_operator(&text)
}
