//! Quantum Brownian dynamics of a two-state system coupled to a classical
//! heat bath.
//!
//! The density operator evolves under a stochastic non-linear Liouville
//! equation
//!
//! ```text
//! iħ ∂ρ/∂t = [H0 − K·(ξ(t) + f_ρ(t)), ρ]
//! ```
//!
//! where `K` is the system operator coupled to the bath coordinate, `ξ(t)` is
//! a Gaussian stochastic force with `<ξ(t)ξ(t')> = kB T Γ(t − t')`, and
//!
//! ```text
//! f_ρ(t) = −∫0^t Γ(t − t') (dQ_ρ/dt')(t') dt',   Q_ρ = Tr(ρ K)
//! ```
//!
//! is the retarded friction force induced by the bath memory kernel `Γ`. For
//! an Ohmic bath, `J(ω) = γω`, the kernel collapses to `2γ δ(t)` and the
//! friction becomes the memoryless `−γ dQ_ρ/dt`.
//!
//! The crate provides:
//!
//! - [`bloch`]/[`density`]: polarization-vector and density-matrix
//!   kinematics for the two-state system, plus mixing entropies;
//! - [`spectral`]: bath spectral densities `J(ω)`, memory kernels, and the
//!   Planck occupation number;
//! - [`noise`]: reproducible per-trajectory Gaussian noise streams obeying
//!   the discrete fluctuation-dissipation rule;
//! - [`tss`]: the stochastic Bloch-vector integrator for the two-state
//!   system, with a dissipated-energy tracker;
//! - [`liouville`]: the general N-level density-matrix integrator, including
//!   memory friction for non-Ohmic kernels;
//! - [`rates`]: golden-rule transition rates (classical-noise, quantized-bath,
//!   and radiative) and the phenomenological rate-equation solution;
//! - [`ensemble`]: deterministic parallel trajectory ensembles;
//! - [`analysis`]: least-squares extraction of decay rates, oscillation
//!   frequencies, and dissipation slopes from the ensemble output;
//! - [`presets`]: canned experiment configurations producing CSV/JSON
//!   artifacts.
//!
//! Internal unit convention: ħ = 1, energies are angular frequencies in
//! rad/s, times are in seconds. Conversions to eV (and to Gaussian units for
//! the radiative branch) happen at the API boundary; see [`consts`].

pub mod analysis;
pub mod bloch;
pub mod consts;
pub mod density;
pub mod ensemble;
pub mod liouville;
pub mod noise;
pub mod params;
pub mod presets;
pub mod rates;
pub mod spectral;
pub mod tss;

mod error;

pub use error::{Error, Result};
