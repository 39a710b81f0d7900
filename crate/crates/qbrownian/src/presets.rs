//! Reproducible experiment presets and run configuration.
//!
//! A [`RunConfig`] starts from the reference parameter set (ω = 3×10⁷
//! rad/s, α = 10⁻⁴, T = 1 mK, dt = 0.658 ns, 1000 trajectories), can be
//! updated from a flat `key = value` config file, and is finally
//! adjusted by command-line flags. Precedence: defaults < file < flags.
//!
//! [`run_preset`] executes one of the canonical experiments and writes
//! data-only artifacts (CSV series, JSON summaries) into the output
//! directory. Summaries never contain wall-clock times, so a run with a
//! fixed seed produces byte-identical artifacts for any worker count;
//! timing lives in the `*_meta.json` sidecars.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::json;

use crate::analysis::{
    asymptotic_pxd_check, decoherence_time, fit_damped_oscillation, fit_exponential, initial_slope,
    plateau_rate, FitReport, DEFAULT_PLATEAU_T_AFTER,
};
use crate::bloch::PolarizationVector;
use crate::ensemble::{run_ensemble, EnsembleConfig, EnsembleResult};
use crate::noise::{effective_field_sigma, NoiseStream, DEFAULT_MASTER_SEED};
use crate::params::SystemParams;
use crate::rates::rates_quantized;
use crate::spectral::SpectralDensity;
use crate::tss::integrate_trajectory;
use crate::{Error, Result};

/// Canonical experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Energy-eigenstate start (Φ = 0): exponential depolarization and
    /// entropy growth.
    Fig1,
    /// Superposition start (Φ = π/2): damped precession.
    Fig2,
    /// Long-horizon energy-drain records for both starts plus a
    /// noiseless single trajectory.
    Fig3,
    /// Rate table for the configured parameters.
    Rates,
    /// One ensemble with caller-chosen angle and horizon.
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Fig1,
        Preset::Fig2,
        Preset::Fig3,
        Preset::Rates,
        Preset::Custom,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Rates => "rates",
            Preset::Custom => "custom",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fig1" => Ok(Preset::Fig1),
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            "rates" => Ok(Preset::Rates),
            "custom" => Ok(Preset::Custom),
            other => Err(Error::InvalidParameter {
                name: "preset",
                message: format!(
                    "unknown preset `{other}` (expected fig1, fig2, fig3, rates, or custom)"
                ),
            }),
        }
    }
}

/// Number of trajectories and horizon used by `--quick` runs.
pub const QUICK_N_TRAJECTORIES: usize = 200;
pub const QUICK_T_MAX: f64 = 0.1e-3;

/// Default horizons and strides per preset.
const SHORT_T_MAX: f64 = 0.25e-3;
const LONG_T_MAX: f64 = 1.5e-3;
const DEFAULT_STRIDE: usize = 100;
const FIG2_STRIDE: usize = 10;

/// Full run description: preset, physical parameters, ensemble shape,
/// and output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub omega: f64,
    pub alpha: f64,
    pub temperature: f64,
    pub dt: f64,
    pub n_trajectories: usize,
    pub master_seed: u64,
    /// Initial tipping angle; `None` uses the preset's canonical angle.
    pub phi: Option<f64>,
    /// Horizon; `None` uses the preset default (0.25 ms, or 1.5 ms for
    /// the long-horizon preset).
    pub t_max: Option<f64>,
    /// Recording stride; `None` uses the preset default.
    pub record_stride: Option<usize>,
    pub noiseless: bool,
    /// Shrinks the run to 200 trajectories over 0.1 ms.
    pub quick: bool,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(preset: Preset) -> Self {
        let p = SystemParams::reference();
        Self {
            preset,
            omega: p.omega,
            alpha: p.alpha,
            temperature: p.temperature,
            dt: p.dt,
            n_trajectories: 1000,
            master_seed: DEFAULT_MASTER_SEED,
            phi: None,
            t_max: None,
            record_stride: None,
            noiseless: false,
            quick: false,
            out_dir: PathBuf::from("."),
        }
    }

    /// Validated physical parameter set.
    pub fn system_params(&self) -> Result<SystemParams> {
        SystemParams::new(self.omega, self.alpha, self.temperature, self.dt)
    }

    fn effective_n(&self) -> usize {
        if self.quick {
            QUICK_N_TRAJECTORIES
        } else {
            self.n_trajectories
        }
    }

    fn effective_t_max(&self, preset_default: f64) -> f64 {
        if self.quick {
            QUICK_T_MAX
        } else {
            self.t_max.unwrap_or(preset_default)
        }
    }

    /// Ensemble configuration with the given per-preset defaults; the
    /// caller-set angle, horizon, and stride win when present.
    fn ensemble(
        &self,
        phi_default: f64,
        t_max_default: f64,
        stride_default: usize,
        phi_override: Option<f64>,
    ) -> Result<EnsembleConfig> {
        let params = self.system_params()?;
        let cfg = EnsembleConfig {
            n_trajectories: self.effective_n(),
            master_seed: self.master_seed,
            params,
            phi: phi_override.unwrap_or(phi_default),
            t_max: self.effective_t_max(t_max_default),
            record_stride: self.record_stride.unwrap_or(stride_default),
            noiseless: self.noiseless,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key = value` pair. `line` is used in error messages.
    fn apply_kv(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T>
        where
            T::Err: fmt::Display,
        {
            value.parse::<T>().map_err(|e| Error::Parse {
                line,
                message: format!("invalid value `{value}` for `{key}`: {e}"),
            })
        }
        match key {
            "preset" => {
                self.preset = value.parse().map_err(|e| Error::Parse {
                    line,
                    message: format!("{e}"),
                })?
            }
            "omega" => self.omega = parse(key, value, line)?,
            "alpha" => self.alpha = parse(key, value, line)?,
            "temperature" => self.temperature = parse(key, value, line)?,
            "dt" => self.dt = parse(key, value, line)?,
            "n_trajectories" => self.n_trajectories = parse(key, value, line)?,
            "master_seed" => self.master_seed = parse(key, value, line)?,
            "phi" => self.phi = Some(parse(key, value, line)?),
            "t_max" => self.t_max = Some(parse(key, value, line)?),
            "record_stride" => self.record_stride = Some(parse(key, value, line)?),
            "noiseless" => self.noiseless = parse(key, value, line)?,
            "quick" => self.quick = parse(key, value, line)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
        Ok(())
    }

    /// Updates this config from flat `key = value` text. Blank lines and
    /// `#` comments are skipped; unknown and duplicate keys are rejected
    /// with their line number.
    pub fn apply_config_str(&mut self, text: &str) -> Result<()> {
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(Error::Parse {
                    line,
                    message: format!("expected `key = value`, got `{trimmed}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if value.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: format!("empty value for `{key}`"),
                });
            }
            if seen.iter().any(|k| k == key) {
                return Err(Error::Parse {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
            self.apply_kv(key, value, line)?;
            seen.push(key.to_string());
        }
        Ok(())
    }

    /// Reads and applies a config file.
    pub fn apply_config_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_config_str(&text)
    }

    /// Full validation pass: the physical parameters plus the ensemble
    /// shape the preset would actually run with (angle range, horizon,
    /// stride).
    pub fn check(&self) -> Result<()> {
        self.system_params()?;
        match self.preset {
            Preset::Rates => Ok(()),
            Preset::Fig2 => self
                .ensemble(
                    std::f64::consts::FRAC_PI_2,
                    SHORT_T_MAX,
                    FIG2_STRIDE,
                    self.phi,
                )
                .map(drop),
            Preset::Fig3 => self
                .ensemble(
                    std::f64::consts::FRAC_PI_2,
                    LONG_T_MAX,
                    DEFAULT_STRIDE,
                    self.phi,
                )
                .map(drop),
            Preset::Fig1 | Preset::Custom => self
                .ensemble(0.0, SHORT_T_MAX, DEFAULT_STRIDE, self.phi)
                .map(drop),
        }
    }

    /// Echo of the effective configuration, including the derived rate
    /// constants, for `validate` output.
    pub fn describe(&self) -> Result<Vec<String>> {
        let params = self.system_params()?;
        let sigma = effective_field_sigma(&params);
        let mut lines = vec![
            format!("preset          = {}", self.preset),
            format!("omega           = {:e} rad/s", self.omega),
            format!("alpha           = {:e}", self.alpha),
            format!("temperature     = {:e} K", self.temperature),
            format!("dt              = {:e} s", self.dt),
            format!("n_trajectories  = {}", self.effective_n()),
            format!("master_seed     = {}", self.master_seed),
            format!(
                "phi             = {}",
                self.phi
                    .map_or_else(|| "preset default".to_string(), |v| format!("{v:e} rad"))
            ),
            format!(
                "t_max           = {}",
                if self.quick {
                    format!("{QUICK_T_MAX:e} s (quick)")
                } else {
                    self.t_max
                        .map_or_else(|| "preset default".to_string(), |v| format!("{v:e} s"))
                }
            ),
            format!(
                "record_stride   = {}",
                self.record_stride
                    .map_or_else(|| "preset default".to_string(), |v| v.to_string())
            ),
            format!("noiseless       = {}", self.noiseless),
            format!("quick           = {}", self.quick),
            format!("out_dir         = {}", self.out_dir.display()),
            String::new(),
            format!("derived lambda  = {:e} 1/s", params.lambda()),
            format!("derived a_fi    = {:e} 1/s", params.a_fi()),
            format!("derived sigma   = {:e} rad/s", sigma),
        ];
        let ratio = params.kt_over_hbar() / params.omega;
        lines.push(format!("kT/(hbar*omega) = {ratio:.4}"));
        Ok(lines)
    }
}

/// Files written plus a human-readable report for the terminal.
#[derive(Clone, Debug, Default)]
pub struct PresetOutcome {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

impl PresetOutcome {
    fn file(&mut self, path: PathBuf) {
        self.files.push(path);
    }

    fn line(&mut self, text: String) {
        self.lines.push(text);
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| Error::InvalidState(format!("cannot serialize summary: {e}")))?;
    out.write_all(b"\n")?;
    Ok(())
}

fn fit_to_json(report: &FitReport) -> serde_json::Value {
    serde_json::to_value(report).unwrap_or_else(|e| json!({ "error": e.to_string() }))
}

/// Fit window for the exponential depolarization: up to ~2.3 decay
/// times of the expected rate (about one decade of decay), clipped to
/// the horizon.
fn exp_fit_window(lambda: f64, t_max: f64) -> (f64, f64) {
    (0.0, (2.3 / (2.0 * lambda)).min(t_max))
}

/// Fit window for the damped precession: a few amplitude decay times.
fn osc_fit_window(lambda: f64, t_max: f64) -> (f64, f64) {
    (0.0, (2.5 / lambda).min(t_max))
}

/// Tail window start for the late-time drain rate: the canonical 0.2 ms
/// when the horizon leaves a usable tail behind it, otherwise the second
/// half of the horizon.
fn tail_start(t_max: f64) -> f64 {
    if t_max >= SHORT_T_MAX {
        DEFAULT_PLATEAU_T_AFTER
    } else {
        0.5 * t_max
    }
}

/// Anchor for the saturating-exponential fit of the noiseless drain:
/// 0.4 ms puts the anchor well past the initial linear regime on the
/// canonical long horizon; short horizons fall back to their second half.
const APPROACH_T_S: f64 = 0.4e-3;

fn approach_anchor(t_max: f64) -> f64 {
    if t_max >= 2.0 * APPROACH_T_S {
        APPROACH_T_S
    } else {
        0.5 * t_max
    }
}

fn params_json(params: &SystemParams) -> serde_json::Value {
    json!({
        "omega_rad_per_s": params.omega,
        "alpha": params.alpha,
        "temperature_k": params.temperature,
        "dt_s": params.dt,
    })
}

/// Mean over the recorded grid of |⟨P_x⟩| and of the P_x standard error:
/// the drift statistic paired with its statistical yardstick.
fn px_drift_stats(res: &EnsembleResult) -> (f64, f64) {
    let n = res.times.len() as f64;
    let drift = res.avg_p.iter().map(|p| p.x.abs()).sum::<f64>() / n;
    let stderr = res.stderr_p.iter().map(|s| s[0]).sum::<f64>() / n;
    (drift, stderr)
}

fn run_fig1(cfg: &RunConfig, out: &mut PresetOutcome) -> Result<()> {
    let ens_cfg = cfg.ensemble(0.0, SHORT_T_MAX, DEFAULT_STRIDE, cfg.phi)?;
    let res = run_ensemble(&ens_cfg)?;
    let csv = cfg.out_dir.join("fig1_ensemble.csv");
    res.write_csv(&csv)?;
    out.file(csv);
    let meta = cfg.out_dir.join("fig1_meta.json");
    res.write_meta_json(&meta)?;
    out.file(meta);

    let lambda = ens_cfg.params.lambda();
    let window = exp_fit_window(lambda, ens_cfg.t_max);
    let px: Vec<f64> = res.avg_p.iter().map(|p| p.x).collect();
    let fit = fit_exponential(&res.times, &px, window)?;
    let tau_d = decoherence_time(&res.times, &res.avg_p)?;
    let kappa_e = plateau_rate(&res.times, &res.avg_pxd, Some(tail_start(ens_cfg.t_max)))?;
    let s_final = *res.entropy.last().unwrap();

    let rate = fit.value("rate");
    let expected = 2.0 * lambda;
    out.line(format!(
        "fig1: fitted <Px> decay rate {rate:.6e} 1/s (expected 2*lambda = {expected:.6e})"
    ));
    out.line(format!(
        "fig1: decoherence time {tau_d:.6e} s (1/(2*lambda) = {:.6e} s)",
        1.0 / expected
    ));
    out.line(format!(
        "fig1: entropy at horizon {s_final:.6} (two-state maximum ln 2 = {:.6})",
        std::f64::consts::LN_2
    ));
    out.line(format!("fig1: late-time drain rate {kappa_e:.6e} 1/s"));

    let summary = json!({
        "preset": "fig1",
        "params": params_json(&ens_cfg.params),
        "n_trajectories": ens_cfg.n_trajectories,
        "master_seed": ens_cfg.master_seed,
        "phi_rad": ens_cfg.phi,
        "t_max_s": ens_cfg.t_max,
        "record_stride": ens_cfg.record_stride,
        "fit_px": fit_to_json(&fit),
        "expected_rate_1_per_s": expected,
        "decoherence_time_s": tau_d,
        "decoherence_time_expected_s": 1.0 / expected,
        "entropy_final": s_final,
        "entropy_two_state_max": std::f64::consts::LN_2,
        "drain_rate_tail_1_per_s": kappa_e,
        "drain_tail_start_s": tail_start(ens_cfg.t_max),
    });
    let path = cfg.out_dir.join("fig1_summary.json");
    write_json(&path, &summary)?;
    out.file(path);
    Ok(())
}

fn run_fig2(cfg: &RunConfig, out: &mut PresetOutcome) -> Result<()> {
    let ens_cfg = cfg.ensemble(
        std::f64::consts::FRAC_PI_2,
        SHORT_T_MAX,
        FIG2_STRIDE,
        cfg.phi,
    )?;
    let res = run_ensemble(&ens_cfg)?;
    let csv = cfg.out_dir.join("fig2_ensemble.csv");
    res.write_csv(&csv)?;
    out.file(csv);
    let meta = cfg.out_dir.join("fig2_meta.json");
    res.write_meta_json(&meta)?;
    out.file(meta);

    let lambda = ens_cfg.params.lambda();
    let window = osc_fit_window(lambda, ens_cfg.t_max);
    let py: Vec<f64> = res.avg_p.iter().map(|p| p.y).collect();
    let pz: Vec<f64> = res.avg_p.iter().map(|p| p.z).collect();
    let fit = fit_damped_oscillation(&res.times, &py, &pz, window)?;
    let tau_d = decoherence_time(&res.times, &res.avg_p)?;
    let kappa_e = plateau_rate(&res.times, &res.avg_pxd, Some(tail_start(ens_cfg.t_max)))?;
    let (drift, stderr) = px_drift_stats(&res);

    let lam_hat = fit.value("decay_rate");
    let om_hat = fit.value("angular_frequency");
    out.line(format!(
        "fig2: fitted precession decay {lam_hat:.6e} 1/s (expected lambda = {lambda:.6e})"
    ));
    out.line(format!(
        "fig2: fitted precession frequency {om_hat:.8e} rad/s (bare {:.8e})",
        ens_cfg.params.omega
    ));
    out.line(format!(
        "fig2: decoherence time {tau_d:.6e} s; mean |<Px>| {drift:.3e} vs mean stderr {stderr:.3e}"
    ));
    out.line(format!("fig2: late-time drain rate {kappa_e:.6e} 1/s"));

    let summary = json!({
        "preset": "fig2",
        "params": params_json(&ens_cfg.params),
        "n_trajectories": ens_cfg.n_trajectories,
        "master_seed": ens_cfg.master_seed,
        "phi_rad": ens_cfg.phi,
        "t_max_s": ens_cfg.t_max,
        "record_stride": ens_cfg.record_stride,
        "fit_precession": fit_to_json(&fit),
        "expected_decay_1_per_s": lambda,
        "expected_angular_frequency_rad_per_s": ens_cfg.params.omega,
        "decoherence_time_s": tau_d,
        "px_drift_time_avg": drift,
        "px_stderr_time_avg": stderr,
        "drain_rate_tail_1_per_s": kappa_e,
        "drain_tail_start_s": tail_start(ens_cfg.t_max),
    });
    let path = cfg.out_dir.join("fig2_summary.json");
    write_json(&path, &summary)?;
    out.file(path);
    Ok(())
}

fn run_fig3(cfg: &RunConfig, out: &mut PresetOutcome) -> Result<()> {
    let ens0 = cfg.ensemble(0.0, LONG_T_MAX, DEFAULT_STRIDE, None)?;
    let ens90 = cfg.ensemble(
        std::f64::consts::FRAC_PI_2,
        LONG_T_MAX,
        DEFAULT_STRIDE,
        None,
    )?;
    let res0 = run_ensemble(&ens0)?;
    let res90 = run_ensemble(&ens90)?;
    for (label, res) in [("phi0", &res0), ("phi90", &res90)] {
        let csv = cfg.out_dir.join(format!("fig3_{label}_ensemble.csv"));
        res.write_csv(&csv)?;
        out.file(csv);
        let meta = cfg.out_dir.join(format!("fig3_{label}_meta.json"));
        res.write_meta_json(&meta)?;
        out.file(meta);
    }

    // Noiseless single trajectory (friction only). Tipping angle is
    // overridable; the drain then saturates at 1 + cos(phi), the energy
    // gap count between the start and the bottom of the well.
    let params = ens0.params;
    let phi_nl = cfg.phi.unwrap_or(std::f64::consts::FRAC_PI_2);
    let stride = cfg.record_stride.unwrap_or(DEFAULT_STRIDE);
    let t_max = ens0.t_max;
    let mut silent = NoiseStream::new(cfg.master_seed, 0, 0.0);
    let traj = integrate_trajectory(
        PolarizationVector::from_phase(phi_nl),
        &params,
        &mut silent,
        t_max,
        stride,
    )?;
    let traj_csv = cfg.out_dir.join("fig3_noiseless_trajectory.csv");
    traj.write_csv(&traj_csv)?;
    out.file(traj_csv);

    let tail = tail_start(t_max);
    let kappa_e0 = plateau_rate(&res0.times, &res0.avg_pxd, Some(tail))?;
    let kappa_e90 = plateau_rate(&res90.times, &res90.avg_pxd, Some(tail))?;
    let slope_window = (0.0, (50e-6_f64).min(0.5 * t_max));
    let kappa0 = initial_slope(&traj.times, &traj.p_x_d, Some(slope_window))?;
    let drain_target = 1.0 + phi_nl.cos();
    let t_s = approach_anchor(t_max);
    // The approach fit is reported but degenerate starts (e.g. Φ = 0,
    // which never drains without noise) are recorded, not fatal.
    let approach = asymptotic_pxd_check(&traj.times, &traj.p_x_d, t_s, drain_target);
    let a_fi = params.a_fi();

    out.line(format!(
        "fig3: late-time drain rates {kappa_e0:.6e} (phi=0) / {kappa_e90:.6e} (phi=pi/2) 1/s"
    ));
    out.line(format!(
        "fig3: noiseless initial drain slope {kappa0:.6e} 1/s (expected a_fi/2 = {:.6e})",
        a_fi / 2.0
    ));
    match &approach {
        Ok(report) => out.line(format!(
            "fig3: noiseless drain approach rate {:.6e} 1/s (expected a_fi = {a_fi:.6e})",
            report.value("rate")
        )),
        Err(e) => out.line(format!("fig3: drain approach fit unavailable: {e}")),
    }

    let summary = json!({
        "preset": "fig3",
        "params": params_json(&params),
        "n_trajectories": ens0.n_trajectories,
        "master_seed": cfg.master_seed,
        "t_max_s": t_max,
        "record_stride": stride,
        "drain_rate_tail_phi0_1_per_s": kappa_e0,
        "drain_rate_tail_phi90_1_per_s": kappa_e90,
        "drain_tail_start_s": tail,
        "noiseless_phi_rad": phi_nl,
        "noiseless_initial_slope_1_per_s": kappa0,
        "noiseless_initial_slope_expected_1_per_s": a_fi / 2.0,
        "noiseless_slope_window_s": [slope_window.0, slope_window.1],
        "drain_approach": match &approach {
            Ok(report) => fit_to_json(report),
            Err(e) => json!({ "error": e.to_string() }),
        },
        "drain_approach_anchor_s": t_s,
        "drain_approach_expected_rate_1_per_s": a_fi,
        "drain_asymptote": drain_target,
    });
    let path = cfg.out_dir.join("fig3_summary.json");
    write_json(&path, &summary)?;
    out.file(path);
    Ok(())
}

fn run_rates(cfg: &RunConfig, out: &mut PresetOutcome) -> Result<()> {
    let params = cfg.system_params()?;
    let sd = SpectralDensity::ohmic(params.alpha, None)?;
    let rr = rates_quantized(1.0, &sd, params.omega, params.temperature)?;
    let sigma = effective_field_sigma(&params);

    let rows: Vec<(&str, f64, &str)> = vec![
        ("lambda_noise", rr.lambda_noise, "1/s"),
        ("a_fi", rr.a_spontaneous, "1/s"),
        ("lambda_up_quantized", rr.lambda_up_q, "1/s"),
        ("lambda_down_quantized", rr.lambda_down_q, "1/s"),
        ("n_bar", rr.n_bar, "1"),
        ("sigma_eta", sigma, "rad/s"),
        (
            "detailed_balance_down_over_up",
            rr.lambda_down_q / rr.lambda_up_q,
            "1",
        ),
        ("transition_energy", params.delta_ev(), "eV"),
    ];

    let path = cfg.out_dir.join("rates.csv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(file, "quantity,value,unit")?;
    for (name, value, unit) in &rows {
        writeln!(file, "{name},{value:e},{unit}")?;
    }
    drop(file);
    out.file(path);

    for (name, value, unit) in &rows {
        out.line(format!("rates: {name:<30} = {value:.6e} {unit}"));
    }
    if let Some(note) = &rr.regime_note {
        out.line(format!("rates: note: {note}"));
    }
    Ok(())
}

fn run_custom(cfg: &RunConfig, out: &mut PresetOutcome) -> Result<()> {
    let ens_cfg = cfg.ensemble(0.0, SHORT_T_MAX, DEFAULT_STRIDE, cfg.phi)?;
    let res = run_ensemble(&ens_cfg)?;
    let csv = cfg.out_dir.join("custom_ensemble.csv");
    res.write_csv(&csv)?;
    out.file(csv);
    let meta = cfg.out_dir.join("custom_meta.json");
    res.write_meta_json(&meta)?;
    out.file(meta);

    // Generic run: the canonical extractions are attempted and recorded
    // as values or error strings, never fatal.
    let tau_d = decoherence_time(&res.times, &res.avg_p);
    let kappa_e = plateau_rate(&res.times, &res.avg_pxd, Some(tail_start(ens_cfg.t_max)));
    let (drift, stderr) = px_drift_stats(&res);

    out.line(format!(
        "custom: {} trajectories, phi {:.4} rad, horizon {:.3e} s",
        ens_cfg.n_trajectories, ens_cfg.phi, ens_cfg.t_max
    ));
    match &tau_d {
        Ok(t) => out.line(format!("custom: decoherence time {t:.6e} s")),
        Err(e) => out.line(format!("custom: decoherence time unavailable: {e}")),
    }

    let soft = |r: &Result<f64>| match r {
        Ok(v) => json!(v),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let summary = json!({
        "preset": "custom",
        "params": params_json(&ens_cfg.params),
        "n_trajectories": ens_cfg.n_trajectories,
        "master_seed": ens_cfg.master_seed,
        "phi_rad": ens_cfg.phi,
        "t_max_s": ens_cfg.t_max,
        "record_stride": ens_cfg.record_stride,
        "noiseless": ens_cfg.noiseless,
        "decoherence_time_s": soft(&tau_d),
        "drain_rate_tail_1_per_s": soft(&kappa_e),
        "px_drift_time_avg": drift,
        "px_stderr_time_avg": stderr,
        "entropy_final": res.entropy.last().unwrap(),
    });
    let path = cfg.out_dir.join("custom_summary.json");
    write_json(&path, &summary)?;
    out.file(path);
    Ok(())
}

/// Executes the configured preset and writes its artifacts into
/// `cfg.out_dir` (created if missing).
pub fn run_preset(cfg: &RunConfig) -> Result<PresetOutcome> {
    cfg.check()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut out = PresetOutcome::default();
    match cfg.preset {
        Preset::Fig1 => run_fig1(cfg, &mut out)?,
        Preset::Fig2 => run_fig2(cfg, &mut out)?,
        Preset::Fig3 => run_fig3(cfg, &mut out)?,
        Preset::Rates => run_rates(cfg, &mut out)?,
        Preset::Custom => run_custom(cfg, &mut out)?,
    }
    Ok(out)
}
