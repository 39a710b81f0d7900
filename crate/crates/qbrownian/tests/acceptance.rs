//! Acceptance gate: one test per numbered criterion, each printing a
//! single `[PASS]`/`[FAIL]` line with the measured values (visible with
//! `cargo test --test acceptance -- --nocapture`).
//!
//! Criteria 3–6 run full-size ensembles (shared across tests through
//! `OnceLock`), so this suite takes a few minutes of CPU time; everything
//! else is seconds.

use std::sync::OnceLock;

use qbrownian::analysis::{
    asymptotic_pxd_check, decoherence_time, fit_damped_oscillation, fit_exponential, initial_slope,
    plateau_rate,
};
use qbrownian::bloch::PolarizationVector;
use qbrownian::consts::hw_over_kt;
use qbrownian::density::{bloch_to_density, density_to_bloch};
use qbrownian::ensemble::{run_ensemble, EnsembleConfig, EnsembleResult};
use qbrownian::liouville::LiouvilleSystem;
use qbrownian::noise::NoiseStream;
use qbrownian::params::SystemParams;
use qbrownian::presets::{run_preset, Preset, RunConfig};
use qbrownian::rates::{perturbative_occupation, rate_ohmic, rates_quantized};
use qbrownian::spectral::{memory_kernel, MemoryKernel, SpectralDensity};
use qbrownian::tss::{integrate_trajectory, step, Trajectory, TssState};

const PHI_90: f64 = std::f64::consts::FRAC_PI_2;

fn reference() -> SystemParams {
    SystemParams::reference()
}

fn ohmic_unit_coupling() -> SpectralDensity {
    SpectralDensity::ohmic(reference().alpha, None).unwrap()
}

fn verdict(ok: bool, number: u32, label: &str, detail: &str) {
    println!(
        "[{}] criterion {number} ({label}): {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {number} ({label}) failed: {detail}");
}

fn fig1_ensemble() -> &'static EnsembleResult {
    static CELL: OnceLock<EnsembleResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = EnsembleConfig::new(reference(), 0.0, 0.25e-3);
        run_ensemble(&cfg).expect("tipped-by-0 ensemble")
    })
}

fn fig2_ensemble() -> &'static EnsembleResult {
    static CELL: OnceLock<EnsembleResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut cfg = EnsembleConfig::new(reference(), PHI_90, 0.25e-3);
        cfg.record_stride = 10;
        run_ensemble(&cfg).expect("tipped-by-90 ensemble")
    })
}

fn long_ensemble_phi0() -> &'static EnsembleResult {
    static CELL: OnceLock<EnsembleResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = EnsembleConfig::new(reference(), 0.0, 1.5e-3);
        run_ensemble(&cfg).expect("long-horizon ensemble, phi = 0")
    })
}

fn long_ensemble_phi90() -> &'static EnsembleResult {
    static CELL: OnceLock<EnsembleResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = EnsembleConfig::new(reference(), PHI_90, 1.5e-3);
        run_ensemble(&cfg).expect("long-horizon ensemble, phi = pi/2")
    })
}

fn noiseless_trajectory() -> &'static Trajectory {
    static CELL: OnceLock<Trajectory> = OnceLock::new();
    CELL.get_or_init(|| {
        let params = reference();
        let mut silent = NoiseStream::new(42, 0, 0.0);
        integrate_trajectory(
            PolarizationVector::from_phase(PHI_90),
            &params,
            &mut silent,
            1.5e-3,
            100,
        )
        .expect("noiseless trajectory")
    })
}

#[test]
fn criterion_01_transition_rates() {
    let p = reference();
    let lambda = rate_ohmic(p.alpha, p.temperature).unwrap();
    let rr = rates_quantized(1.0, &ohmic_unit_coupling(), p.omega, p.temperature).unwrap();
    let x = hw_over_kt(p.omega, p.temperature);
    let balance = rr.lambda_down_q / rr.lambda_up_q;
    let balance_dev = (balance / x.exp() - 1.0).abs();

    let lambda_dev = (lambda / 2.62e4 - 1.0).abs();
    let a_dev = (rr.a_spontaneous / 6.0e3 - 1.0).abs();
    let ok = lambda_dev < 5e-3 && a_dev < 5e-3 && balance_dev < 1e-12;
    verdict(
        ok,
        1,
        "transition rates",
        &format!(
            "lambda = {lambda:.6e}/s ({:.2}% from 26.2 kHz), A = {:.6e}/s ({:.2}% from 6 kHz), \
             detailed-balance deviation {balance_dev:.2e}",
            100.0 * lambda_dev,
            rr.a_spontaneous,
            100.0 * a_dev
        ),
    );
}

#[test]
fn criterion_02_purity_conservation() {
    let p = reference();
    let mut stream = NoiseStream::for_params(42, 0, &p);
    let mut state = TssState::new(PolarizationVector::from_phase(PHI_90));
    let n_steps = p.steps_for(1.5e-3);
    let mut worst: f64 = 0.0;
    for _ in 0..n_steps {
        state = step(&state, stream.next_sample(), &p);
        worst = worst.max((state.p.norm() - 1.0).abs());
    }
    let ok = worst < 1e-9;
    verdict(
        ok,
        2,
        "purity conservation",
        &format!("max ||P|-1| = {worst:.3e} over {n_steps} noisy steps (bound 1e-9)"),
    );
}

#[test]
fn criterion_03_depolarization_and_entropy() {
    let res = fig1_ensemble();
    let p = reference();
    let lambda = p.lambda();
    let px: Vec<f64> = res.avg_p.iter().map(|v| v.x).collect();
    let window = (0.0, 2.3 / (2.0 * lambda));
    let fit = fit_exponential(&res.times, &px, window).unwrap();
    let rate = fit.value("rate");
    let rate_dev = (rate / 5.24e4 - 1.0).abs();

    // Entropy of the averaged state at the recorded point nearest 0.2 ms.
    let idx = res
        .times
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - 0.2e-3)
                .abs()
                .partial_cmp(&(b.1 - 0.2e-3).abs())
                .unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    let s_dev = (res.entropy[idx] - std::f64::consts::LN_2).abs();

    let ok = rate_dev < 0.15 && s_dev < 0.05;
    verdict(
        ok,
        3,
        "exponential depolarization",
        &format!(
            "fitted <Px> rate = {rate:.5e}/s ({:+.1}% of 52.4 kHz, band 15%), \
             S(0.2 ms) = {:.4} (|S - ln 2| = {s_dev:.4}, band 0.05)",
            100.0 * (rate / 5.24e4 - 1.0),
            res.entropy[idx]
        ),
    );
}

#[test]
fn criterion_04_damped_precession() {
    let res = fig2_ensemble();
    let p = reference();
    let py: Vec<f64> = res.avg_p.iter().map(|v| v.y).collect();
    let pz: Vec<f64> = res.avg_p.iter().map(|v| v.z).collect();
    let window = (0.0, 2.5 / p.lambda());
    let fit = fit_damped_oscillation(&res.times, &py, &pz, window).unwrap();
    let lam_hat = fit.value("decay_rate");
    let om_hat = fit.value("angular_frequency");
    let lam_dev = (lam_hat / 2.62e4 - 1.0).abs();
    let om_dev = (om_hat / p.omega - 1.0).abs();

    // <Px> must hold its initial value within the statistical yardstick:
    // time-averaged |<Px>(t) - <Px>(0)| against 3x the time-averaged
    // standard error of <Px>.
    let px0 = res.avg_p[0].x;
    let n = res.times.len() as f64;
    let drift = res.avg_p.iter().map(|v| (v.x - px0).abs()).sum::<f64>() / n;
    let stderr = res.stderr_p.iter().map(|s| s[0]).sum::<f64>() / n;
    let drift_ok = drift <= 3.0 * stderr;

    let ok = lam_dev < 0.15 && om_dev < 1e-3 && drift_ok;
    verdict(
        ok,
        4,
        "damped precession",
        &format!(
            "fitted decay = {lam_hat:.5e}/s ({:+.1}% of 26.2 kHz, band 15%), \
             frequency dev = {om_dev:.2e} (band 1e-3), \
             <Px> drift {drift:.3e} vs 3*stderr {:.3e}",
            100.0 * (lam_hat / 2.62e4 - 1.0),
            3.0 * stderr
        ),
    );
}

#[test]
fn criterion_05_energy_drain_records() {
    let tail = Some(0.2e-3);
    let k0 = plateau_rate(
        &long_ensemble_phi0().times,
        &long_ensemble_phi0().avg_pxd,
        tail,
    )
    .unwrap();
    let k90 = plateau_rate(
        &long_ensemble_phi90().times,
        &long_ensemble_phi90().avg_pxd,
        tail,
    )
    .unwrap();
    let band = 1.0e3..=3.0e3;
    let tails_ok = band.contains(&k0) && band.contains(&k90);

    let traj = noiseless_trajectory();
    let slope = initial_slope(&traj.times, &traj.p_x_d, None).unwrap();
    let slope_dev = (slope / 3.0e3 - 1.0).abs();
    let approach = asymptotic_pxd_check(&traj.times, &traj.p_x_d, 0.4e-3, 1.0).unwrap();
    let rate = approach.value("rate");
    let rate_dev = (rate / 6.0e3 - 1.0).abs();

    let ok = tails_ok && slope_dev < 0.05 && rate_dev < 0.05;
    verdict(
        ok,
        5,
        "energy drain",
        &format!(
            "tail rates = {k0:.3e} / {k90:.3e} per s (band [1,3] kHz), \
             noiseless initial slope = {slope:.4e}/s ({:+.1}% of 3 kHz, band 5%), \
             approach rate = {rate:.4e}/s ({:+.1}% of 6 kHz, band 5%)",
            100.0 * (slope / 3.0e3 - 1.0),
            100.0 * (rate / 6.0e3 - 1.0)
        ),
    );
}

#[test]
fn criterion_06_decoherence_times() {
    let tau0 = decoherence_time(&fig1_ensemble().times, &fig1_ensemble().avg_p).unwrap();
    let tau90 = decoherence_time(&fig2_ensemble().times, &fig2_ensemble().avg_p).unwrap();
    let tau0_dev = (tau0 / 19.1e-6 - 1.0).abs();
    let ratio = tau90 / tau0;
    let ok = tau0_dev < 0.20 && (1.6..=2.4).contains(&ratio);
    verdict(
        ok,
        6,
        "decoherence times",
        &format!(
            "tau(phi=0) = {tau0:.4e} s ({:+.1}% of 19.1 us, band 20%), \
             ratio tau(phi=90)/tau(phi=0) = {ratio:.3} (band [1.6, 2.4])",
            100.0 * (tau0 / 19.1e-6 - 1.0)
        ),
    );
}

#[test]
fn criterion_07_integrator_equivalence() {
    let p = reference();
    let mut sys = LiouvilleSystem::two_state(&p).unwrap();
    let mut stream = NoiseStream::for_params(42, 1, &p);
    let p0 = PolarizationVector::from_phase(PHI_90);
    let mut state = TssState::new(p0);
    let mut rho = bloch_to_density(&p0).unwrap();
    let mut max_dev: f64 = 0.0;
    let mut max_trace_dev: f64 = 0.0;
    for _ in 0..100_000 {
        let eta = stream.next_sample();
        state = step(&state, eta, &p);
        rho = sys.step_density(&rho, eta / 2.0).unwrap();
        let pl = density_to_bloch(&rho).unwrap();
        max_dev = max_dev
            .max((pl.x - state.p.x).abs())
            .max((pl.y - state.p.y).abs())
            .max((pl.z - state.p.z).abs());
        for k in 1..=4u32 {
            max_trace_dev = max_trace_dev.max((rho.trace_power(k) - 1.0).abs());
        }
    }
    let ok = max_dev < 1e-8 && max_trace_dev < 1e-10;
    verdict(
        ok,
        7,
        "integrator equivalence",
        &format!(
            "max component deviation = {max_dev:.3e} over 1e5 shared-noise steps (bound 1e-8), \
             max |Tr(rho^k) - 1| = {max_trace_dev:.3e} for k <= 4 (bound 1e-10)"
        ),
    );
}

#[test]
fn criterion_08_quantized_vs_classical_rates() {
    let p = reference();
    let rr = rates_quantized(1.0, &ohmic_unit_coupling(), p.omega, p.temperature).unwrap();
    let mean = 0.5 * (rr.lambda_up_q + rr.lambda_down_q);
    let mean_dev = (mean / rr.lambda_noise - 1.0).abs();

    // Classical regime: k_BT = 100 hbar*omega, i.e. T = 100*(hbar*omega/kB).
    let t_hot = 100.0 * hw_over_kt(p.omega, 1.0);
    let hot = rates_quantized(1.0, &ohmic_unit_coupling(), p.omega, t_hot).unwrap();
    let up_dev = (hot.lambda_up_q / hot.lambda_noise - 1.0).abs();
    let down_dev = (hot.lambda_down_q / hot.lambda_noise - 1.0).abs();

    let ok = mean_dev < 0.01 && up_dev < 0.01 && down_dev < 0.01;
    verdict(
        ok,
        8,
        "quantized vs classical rates",
        &format!(
            "reference: (up+down)/2 vs noise dev = {:.3}% (band 1%); \
             at kT = 100 hbar*omega: up dev = {:.3}%, down dev = {:.3}% (band 1%)",
            100.0 * mean_dev,
            100.0 * up_dev,
            100.0 * down_dev
        ),
    );
}

#[test]
fn criterion_09_perturbative_occupation() {
    let p = reference();
    let lambda = p.lambda();
    let delta = MemoryKernel::Delta {
        weight: 2.0 * p.alpha,
    };
    let (t1, t2) = (2.0e-7, 4.0e-7);
    let slope_of = |kernel: &MemoryKernel| -> f64 {
        let v1 = perturbative_occupation(t1, kernel, 1.0, p.omega, p.temperature)
            .unwrap()
            .value;
        let v2 = perturbative_occupation(t2, kernel, 1.0, p.omega, p.temperature)
            .unwrap()
            .value;
        (v2 - v1) / (t2 - t1)
    };
    let delta_slope = slope_of(&delta);
    let delta_dev = (delta_slope / lambda - 1.0).abs();

    // Narrow retarded Gaussians of total weight 2*alpha; the occupation
    // slope must converge to the delta-kernel answer as the width shrinks
    // toward the step size.
    let gaussian = |sigma: f64| -> MemoryKernel {
        let h = sigma / 20.0;
        let n = (6.0 * sigma / h).ceil() as usize;
        let grid: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let norm = 2.0 * p.alpha / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let values: Vec<f64> = grid
            .iter()
            .map(|t| norm * (-t * t / (2.0 * sigma * sigma)).exp())
            .collect();
        MemoryKernel::sampled(&grid, values).unwrap()
    };
    let wide_dev = (slope_of(&gaussian(8.0 * p.dt)) / lambda - 1.0).abs();
    let narrow_dev = (slope_of(&gaussian(2.0 * p.dt)) / lambda - 1.0).abs();

    let ok = delta_dev < 0.02 && narrow_dev < 0.02 && narrow_dev <= wide_dev + 1e-12;
    verdict(
        ok,
        9,
        "perturbative occupation",
        &format!(
            "delta-kernel slope dev = {delta_dev:.2e} (band 2%), \
             gaussian slope dev {wide_dev:.3e} (width 8dt) -> {narrow_dev:.3e} (width 2dt, band 2%)"
        ),
    );
}

#[test]
fn criterion_10_kernel_quadrature() {
    let gamma = 1.7;
    let wc = 1.0e8;
    let sd = SpectralDensity::ohmic(gamma, Some(wc)).unwrap();
    let grid: Vec<f64> = (0..100).map(|i| i as f64 * 2.2e-9).collect();
    let kernel = memory_kernel(&sd, Some(&grid), None).unwrap();
    let scale = 2.0 * gamma * wc / std::f64::consts::PI;
    let mut worst: f64 = 0.0;
    let MemoryKernel::Sampled { ref values, .. } = kernel else {
        panic!("expected a sampled kernel");
    };
    for (i, &t) in grid.iter().enumerate() {
        let exact = if t == 0.0 {
            scale
        } else {
            2.0 * gamma * (wc * t).sin() / (std::f64::consts::PI * t)
        };
        worst = worst.max((values[i] - exact).abs() / scale);
    }
    let ok = worst < 1e-6;
    verdict(
        ok,
        10,
        "kernel quadrature",
        &format!(
            "max |quadrature - closed form| / Gamma(0) = {worst:.3e} on 100 points (bound 1e-6)"
        ),
    );
}

#[test]
fn criterion_11_worker_count_determinism() {
    let mut artifacts: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    for workers in [1usize, 4, 16] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::new(Preset::Fig1);
        cfg.quick = true;
        cfg.out_dir = dir.path().to_path_buf();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap();
        pool.install(|| run_preset(&cfg)).unwrap();
        let csv = std::fs::read(dir.path().join("fig1_ensemble.csv")).unwrap();
        let summary = std::fs::read(dir.path().join("fig1_summary.json")).unwrap();
        artifacts.push((csv, summary));
    }
    let csv_ok = artifacts.iter().all(|a| a.0 == artifacts[0].0);
    let json_ok = artifacts.iter().all(|a| a.1 == artifacts[0].1);
    let ok = csv_ok && json_ok;
    verdict(
        ok,
        11,
        "worker-count determinism",
        &format!(
            "CSV bytes identical: {csv_ok}, summary JSON bytes identical: {json_ok} \
             across worker counts {{1, 4, 16}}"
        ),
    );
}
