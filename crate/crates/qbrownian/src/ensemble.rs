//! Seed-deterministic ensembles of independent noise trajectories.
//!
//! Each trajectory r draws its noise from the substream
//! `(master_seed, r)`, so the ensemble is reproducible regardless of how
//! trajectories are scheduled. Averages are reduced in fixed trajectory
//! order: trajectories are summed sequentially inside blocks of 32, block
//! partials are collected in block order and folded sequentially — the
//! result is bit-identical for any rayon worker count, and the two-level
//! summation keeps the accumulated floating-point error at the √N level.
//!
//! Individual trajectories stay pure (they are rotations of a unit
//! vector); decoherence appears only in the ensemble mean, whose length
//! shrinks as the phases spread. The entropy track is therefore computed
//! from |⟨P⟩|, not as the average of per-trajectory entropies (which are
//! identically zero).

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{entropy_of_polarization, PolarizationVector};
use crate::noise::{effective_field_sigma, NoiseStream, DEFAULT_MASTER_SEED};
use crate::params::SystemParams;
use crate::tss::integrate_trajectory;
use crate::{Error, Result};

/// Trajectories per summation block (reduction granularity).
const BLOCK: usize = 32;

/// Configuration of one ensemble run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_trajectories: usize,
    pub master_seed: u64,
    pub params: SystemParams,
    /// Initial tipping angle: P₀ = (cos Φ, 0, sin Φ).
    pub phi: f64,
    pub t_max: f64,
    pub record_stride: usize,
    /// Replace the noise by zeros (friction still active).
    pub noiseless: bool,
}

impl EnsembleConfig {
    /// Defaults: 1000 trajectories, master seed 42, stride 100, noise on.
    pub fn new(params: SystemParams, phi: f64, t_max: f64) -> Self {
        Self {
            n_trajectories: 1000,
            master_seed: DEFAULT_MASTER_SEED,
            params,
            phi,
            t_max,
            record_stride: 100,
            noiseless: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories == 0 {
            return Err(Error::InvalidParameter {
                name: "n_trajectories",
                message: "at least one trajectory is required".into(),
            });
        }
        if !(0.0..std::f64::consts::TAU).contains(&self.phi) {
            return Err(Error::InvalidParameter {
                name: "phi",
                message: format!("initial angle must lie in [0, 2π), got {}", self.phi),
            });
        }
        if !self.t_max.is_finite() || self.t_max <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "t_max",
                message: format!("horizon must be finite and > 0, got {}", self.t_max),
            });
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter {
                name: "record_stride",
                message: "record stride must be ≥ 1".into(),
            });
        }
        Ok(())
    }

    pub fn initial_polarization(&self) -> PolarizationVector {
        PolarizationVector::from_phase(self.phi)
    }
}

/// Metadata sidecar of a run. Wall time lives here (and only here) so
/// the numerical artifacts stay byte-identical across reruns.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunMetadata {
    pub master_seed: u64,
    pub params: SystemParams,
    pub n_trajectories: usize,
    pub dt: f64,
    pub wall_time_s: f64,
}

/// Ensemble averages on the recording grid.
#[derive(Clone, Debug)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub avg_p: Vec<PolarizationVector>,
    /// Standard error of the mean, per component.
    pub stderr_p: Vec<[f64; 3]>,
    /// Entropy of the averaged polarization.
    pub entropy: Vec<f64>,
    pub avg_pxd: Vec<f64>,
    pub meta: RunMetadata,
}

/// Per-point accumulator: Σx, Σy, Σz, Σx², Σy², Σz², ΣPxd.
type Accum = [f64; 7];

fn integrate_block(
    cfg: &EnsembleConfig,
    sigma: f64,
    block_start: usize,
    block_len: usize,
    n_points: usize,
) -> Result<Vec<Accum>> {
    let mut acc = vec![[0.0; 7]; n_points];
    let p0 = cfg.initial_polarization();
    for r in block_start..block_start + block_len {
        let mut stream = NoiseStream::new(cfg.master_seed, r as u64, sigma);
        let traj = integrate_trajectory(p0, &cfg.params, &mut stream, cfg.t_max, cfg.record_stride)
            .map_err(|e| Error::TrajectoryFailed {
                trajectory: r,
                source: Box::new(e),
            })?;
        debug_assert_eq!(traj.len(), n_points);
        for (i, a) in acc.iter_mut().enumerate() {
            let p = traj.p[i];
            a[0] += p.x;
            a[1] += p.y;
            a[2] += p.z;
            a[3] += p.x * p.x;
            a[4] += p.y * p.y;
            a[5] += p.z * p.z;
            a[6] += traj.p_x_d[i];
        }
    }
    Ok(acc)
}

/// Entropy of the averaged polarization at each time.
pub fn entropy_track(avg_p: &[PolarizationVector]) -> Result<Vec<f64>> {
    avg_p.iter().map(entropy_of_polarization).collect()
}

/// Runs the configured ensemble. Deterministic for a fixed
/// (config, master seed) regardless of worker count; trajectory failures
/// carry the failing trajectory index.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let sigma = if cfg.noiseless {
        0.0
    } else {
        effective_field_sigma(&cfg.params)
    };
    let n_steps = cfg.params.steps_for(cfg.t_max);
    let n_points =
        n_steps / cfg.record_stride + 1 + usize::from(!n_steps.is_multiple_of(cfg.record_stride));
    let n = cfg.n_trajectories;

    let n_blocks = n.div_ceil(BLOCK);
    let partials: Vec<Result<Vec<Accum>>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let block_start = b * BLOCK;
            let block_len = BLOCK.min(n - block_start);
            integrate_block(cfg, sigma, block_start, block_len, n_points)
        })
        .collect();

    let mut total = vec![[0.0f64; 7]; n_points];
    for partial in partials {
        let partial = partial?;
        for (t, p) in total.iter_mut().zip(&partial) {
            for k in 0..7 {
                t[k] += p[k];
            }
        }
    }

    let nf = n as f64;
    let mut times = Vec::with_capacity(n_points);
    let mut k = 0;
    while k * cfg.record_stride < n_steps {
        times.push((k * cfg.record_stride) as f64 * cfg.params.dt);
        k += 1;
    }
    times.push(n_steps as f64 * cfg.params.dt);
    debug_assert_eq!(times.len(), n_points);

    let mut avg_p = Vec::with_capacity(n_points);
    let mut stderr_p = Vec::with_capacity(n_points);
    let mut avg_pxd = Vec::with_capacity(n_points);
    for a in &total {
        let mean = [a[0] / nf, a[1] / nf, a[2] / nf];
        avg_p.push(PolarizationVector::new(mean[0], mean[1], mean[2]));
        let mut se = [0.0; 3];
        if n > 1 {
            for c in 0..3 {
                let ss = (a[3 + c] - a[c] * a[c] / nf).max(0.0);
                se[c] = (ss / (nf * (nf - 1.0))).sqrt();
            }
        }
        stderr_p.push(se);
        avg_pxd.push(a[6] / nf);
    }
    let entropy = entropy_track(&avg_p)?;

    Ok(EnsembleResult {
        times,
        avg_p,
        stderr_p,
        entropy,
        avg_pxd,
        meta: RunMetadata {
            master_seed: cfg.master_seed,
            params: cfg.params,
            n_trajectories: n,
            dt: cfg.params.dt,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    })
}

impl EnsembleResult {
    /// Writes the averaged series as CSV with the fixed column schema
    /// `t_s,avg_Px,avg_Py,avg_Pz,stderr_Px,stderr_Py,stderr_Pz,S,avg_Pxd`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            out,
            "t_s,avg_Px,avg_Py,avg_Pz,stderr_Px,stderr_Py,stderr_Pz,S,avg_Pxd"
        )?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                self.times[i],
                self.avg_p[i].x,
                self.avg_p[i].y,
                self.avg_p[i].z,
                self.stderr_p[i][0],
                self.stderr_p[i][1],
                self.stderr_p[i][2],
                self.entropy[i],
                self.avg_pxd[i]
            )?;
        }
        Ok(())
    }

    /// Writes the metadata sidecar (seed, params, N_t, dt, wall time).
    pub fn write_meta_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), &self.meta)
            .map_err(|e| Error::InvalidState(format!("cannot serialize metadata: {e}")))?;
        Ok(())
    }

    /// Numerical payload without metadata, for bitwise comparisons.
    pub fn payload_eq(&self, other: &EnsembleResult) -> bool {
        self.times == other.times
            && self.avg_p == other.avg_p
            && self.stderr_p == other.stderr_p
            && self.entropy == other.entropy
            && self.avg_pxd == other.avg_pxd
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(phi: f64, noiseless: bool) -> EnsembleConfig {
        let mut cfg = EnsembleConfig::new(SystemParams::reference(), phi, 2e-6);
        cfg.n_trajectories = 40;
        cfg.record_stride = 50;
        cfg.noiseless = noiseless;
        cfg
    }

    #[test]
    fn noiseless_upper_state_stays_put() {
        let mut cfg = small_cfg(0.0, true);
        cfg.n_trajectories = 1;
        let res = run_ensemble(&cfg).unwrap();
        for (p, se) in res.avg_p.iter().zip(&res.stderr_p) {
            assert_eq!((p.x, p.y, p.z), (1.0, 0.0, 0.0));
            assert_eq!(se, &[0.0; 3]);
        }
        for s in &res.entropy {
            assert_eq!(*s, 0.0);
        }
    }

    #[test]
    fn reruns_are_bit_identical() {
        let cfg = small_cfg(std::f64::consts::FRAC_PI_2, false);
        let a = run_ensemble(&cfg).unwrap();
        let b = run_ensemble(&cfg).unwrap();
        assert!(a.payload_eq(&b));
    }

    #[test]
    fn different_seeds_differ() {
        let cfg = small_cfg(0.0, false);
        let mut cfg2 = cfg;
        cfg2.master_seed = 43;
        let a = run_ensemble(&cfg).unwrap();
        let b = run_ensemble(&cfg2).unwrap();
        assert!(!a.payload_eq(&b));
    }

    #[test]
    fn dissipation_track_is_nondecreasing() {
        let res = run_ensemble(&small_cfg(std::f64::consts::FRAC_PI_2, false)).unwrap();
        for w in res.avg_pxd.windows(2) {
            assert!(w[1] >= w[0] - 1e-10);
        }
    }

    #[test]
    fn mean_polarization_stays_inside_the_ball() {
        let res = run_ensemble(&small_cfg(0.0, false)).unwrap();
        for p in &res.avg_p {
            assert!(p.norm() <= 1.0 + 1e-9);
        }
        // Pure initial state: S(0) = 0.
        assert_eq!(res.entropy[0], 0.0);
    }

    #[test]
    fn time_grid_is_exact_and_covers_horizon() {
        let cfg = small_cfg(0.0, true);
        let res = run_ensemble(&cfg).unwrap();
        let n_steps = cfg.params.steps_for(cfg.t_max);
        assert_eq!(
            res.times.len(),
            n_steps / cfg.record_stride
                + 1
                + usize::from(!n_steps.is_multiple_of(cfg.record_stride))
        );
        assert_eq!(res.times[0], 0.0);
        assert_eq!(res.times[1], 50.0 * cfg.params.dt);
        assert!(*res.times.last().unwrap() >= cfg.t_max);
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_cfg(0.0, false);
        cfg.n_trajectories = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg(0.0, false);
        cfg.phi = -0.1;
        assert!(cfg.validate().is_err());
        cfg.phi = std::f64::consts::TAU;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg(0.0, false);
        cfg.record_stride = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg(0.0, false);
        cfg.t_max = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn csv_schema_and_row_count() {
        let res = run_ensemble(&small_cfg(0.0, true)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ens.csv");
        res.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t_s,avg_Px,avg_Py,avg_Pz,stderr_Px,stderr_Py,stderr_Pz,S,avg_Pxd"
        );
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), res.times.len());
        // Every field of the first data row parses back to f64.
        for field in rows[0].split(',') {
            field.parse::<f64>().unwrap();
        }
        let meta_path = dir.path().join("ens_meta.json");
        res.write_meta_json(&meta_path).unwrap();
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&meta_path).unwrap()).unwrap();
        assert_eq!(meta["n_trajectories"], 40);
        assert!(meta["wall_time_s"].as_f64().unwrap() >= 0.0);
    }

    #[test]
    fn entropy_track_matches_pointwise_entropy() {
        let res = run_ensemble(&small_cfg(0.0, false)).unwrap();
        for (s, p) in res.entropy.iter().zip(&res.avg_p) {
            assert_eq!(*s, entropy_of_polarization(p).unwrap());
        }
    }
}
