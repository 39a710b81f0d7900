//! Extraction of rates, frequencies, and dissipation constants from
//! recorded time series.
//!
//! All fitters are deterministic damped Gauss–Newton solvers with
//! analytic Jacobians and log-linear / phase-increment seeding — no
//! random restarts, so identical inputs give identical reports.
//! Uncertainties are linearized 1σ values from the normal-equation
//! covariance scaled by the residual variance.
//!
//! Time arrays are assumed sorted ascending (as produced by the
//! integrators); windows select the closed interval `[lo, hi]`.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::Serialize;

use crate::bloch::PolarizationVector;
use crate::{Error, Result};

/// One fitted parameter with its 1σ uncertainty.
#[derive(Clone, Debug, Serialize)]
pub struct FitParam {
    pub name: &'static str,
    pub value: f64,
    pub sigma: f64,
}

/// Outcome of a fit: model label, parameters, residual RMS in the data's
/// units, and the window that was requested.
#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub model: String,
    pub params: Vec<FitParam>,
    pub residual_rms: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

impl FitReport {
    pub fn param(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Value of a named parameter; panics if absent (programmer error).
    pub fn value(&self, name: &str) -> f64 {
        self.param(name)
            .unwrap_or_else(|| panic!("fit report has no parameter named {name}"))
            .value
    }
}

const MAX_ITERATIONS: usize = 200;
const MAX_HALVINGS: usize = 50;
const STEP_TOL: f64 = 1e-13;
/// Under-resolution threshold: at least 8 samples per oscillation period.
const MAX_PHASE_STEP: f64 = std::f64::consts::TAU / 8.0;

fn check_window(window: (f64, f64)) -> Result<()> {
    if !(window.0.is_finite() && window.1.is_finite() && window.0 < window.1) {
        return Err(Error::InvalidParameter {
            name: "window",
            message: format!("need finite lo < hi, got ({}, {})", window.0, window.1),
        });
    }
    Ok(())
}

/// Index range of samples with `lo ≤ t ≤ hi` (times ascending).
fn select(times: &[f64], window: (f64, f64)) -> Result<std::ops::Range<usize>> {
    check_window(window)?;
    let lo = times.partition_point(|&t| t < window.0);
    let hi = times.partition_point(|&t| t <= window.1);
    Ok(lo..hi)
}

fn check_same_len(times: &[f64], values: &[f64]) -> Result<()> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    Ok(())
}

/// Linear least squares `y = s·t + c` with centered abscissa.
/// Returns (slope, intercept, sigma_slope, residual_rms).
fn linear_ls(ts: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = ts.len() as f64;
    let t_bar = ts.iter().sum::<f64>() / n;
    let y_bar = ys.iter().sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    for (&t, &y) in ts.iter().zip(ys) {
        stt += (t - t_bar) * (t - t_bar);
        sty += (t - t_bar) * (y - y_bar);
    }
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let intercept = y_bar - slope * t_bar;
    let mut ssr = 0.0;
    for (&t, &y) in ts.iter().zip(ys) {
        let r = slope * t + intercept - y;
        ssr += r * r;
    }
    let dof = (ts.len() as f64 - 2.0).max(1.0);
    let sigma_slope = if stt > 0.0 {
        (ssr / dof / stt).sqrt()
    } else {
        0.0
    };
    (slope, intercept, sigma_slope, (ssr / n).sqrt())
}

/// Damped Gauss–Newton for a single rate parameter.
///
/// `model(rate, tau)` returns the model value and its derivative with
/// respect to the rate at elapsed time `tau`. Returns (rate, sigma, ssr).
fn fit_rate_1p<F>(taus: &[f64], ys: &[f64], seed: f64, model: F) -> Result<(f64, f64, f64)>
where
    F: Fn(f64, f64) -> (f64, f64),
{
    let ssr_at = |r: f64| -> f64 {
        taus.iter()
            .zip(ys)
            .map(|(&tau, &y)| {
                let (m, _) = model(r, tau);
                (m - y) * (m - y)
            })
            .sum()
    };
    let mut rate = seed;
    let mut ssr = ssr_at(rate);
    let mut h_last = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let mut g = 0.0;
        let mut h = 0.0;
        for (&tau, &y) in taus.iter().zip(ys) {
            let (m, dm) = model(rate, tau);
            g += dm * (m - y);
            h += dm * dm;
        }
        h_last = h;
        if h == 0.0 {
            // Model insensitive to the rate everywhere: nothing to fit.
            return Err(Error::FitFailed(
                "rate is indeterminate (zero sensitivity over the window)".into(),
            ));
        }
        let mut delta = -g / h;
        let mut halvings = 0;
        let mut next = ssr_at(rate + delta);
        while next > ssr && halvings < MAX_HALVINGS {
            delta *= 0.5;
            next = ssr_at(rate + delta);
            halvings += 1;
        }
        if next > ssr {
            // No descent direction left: accept the current point.
            break;
        }
        rate += delta;
        ssr = next;
        if delta.abs() <= STEP_TOL * (1.0 + rate.abs()) {
            let dof = (taus.len() as f64 - 1.0).max(1.0);
            let sigma = (ssr / dof / h_last).sqrt();
            return Ok((rate, sigma, ssr));
        }
    }
    let dof = (taus.len() as f64 - 1.0).max(1.0);
    let sigma = if h_last > 0.0 {
        (ssr / dof / h_last).sqrt()
    } else {
        0.0
    };
    // Accept a stalled iteration only if the residual is already tiny
    // relative to the data scale; otherwise report non-convergence.
    let scale: f64 = ys.iter().fold(0.0f64, |a, &y| a.max(y.abs())).max(1e-300);
    if (ssr / taus.len() as f64).sqrt() <= 1e-7 * scale {
        return Ok((rate, sigma, ssr));
    }
    Err(Error::FitFailed(format!(
        "rate fit did not converge after {MAX_ITERATIONS} iterations"
    )))
}

/// Fits `y(t) = y₀·exp(−r·(t−t₀))` over the window, with the amplitude
/// `y₀` pinned to the first windowed sample. Reports parameters `rate`
/// and `amplitude` (the latter with zero uncertainty, since it is
/// anchored, not fitted).
pub fn fit_exponential(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<FitReport> {
    check_same_len(times, values)?;
    let range = select(times, window)?;
    let n = range.len();
    if n < 10 {
        return Err(Error::InvalidParameter {
            name: "window",
            message: format!("need at least 10 samples in the window, found {n}"),
        });
    }
    let t0 = times[range.start];
    let y0 = values[range.start];
    if y0.is_nan() || y0 <= 0.0 {
        return Err(Error::FitFailed(format!(
            "window-start amplitude must be positive for a decay fit, got {y0}"
        )));
    }
    let taus: Vec<f64> = times[range.clone()].iter().map(|&t| t - t0).collect();
    let ys: Vec<f64> = values[range].to_vec();

    // Log-linear seed over the positive samples.
    let mut lt = Vec::new();
    let mut ly = Vec::new();
    for (&tau, &y) in taus.iter().zip(&ys) {
        if y > 0.0 {
            lt.push(tau);
            ly.push((y / y0).ln());
        }
    }
    if lt.len() < 2 {
        return Err(Error::FitFailed(
            "too few positive samples for log-linear seeding".into(),
        ));
    }
    let (slope, _, _, _) = linear_ls(&lt, &ly);
    let seed = -slope;

    let (rate, sigma, ssr) = fit_rate_1p(&taus, &ys, seed, |r, tau| {
        let m = y0 * (-r * tau).exp();
        (m, -tau * m)
    })?;
    Ok(FitReport {
        model: "exponential".into(),
        params: vec![
            FitParam {
                name: "rate",
                value: rate,
                sigma,
            },
            FitParam {
                name: "amplitude",
                value: y0,
                sigma: 0.0,
            },
        ],
        residual_rms: (ssr / n as f64).sqrt(),
        window,
        n_points: n,
    })
}

/// Fits the complex series `z(t) = P_z(t) + i·P_y(t)` to a damped
/// rotation `a·exp(−λτ)·exp(i(Ωτ+φ))` with `τ = t − t₀` measured from
/// the window start.
///
/// Reports `amplitude`, `phase` (at the window start, wrapped to
/// (−π, π]), `decay_rate`, and `angular_frequency`. The frequency is
/// reported as a magnitude: the rotation sense is fixed by the equations
/// of motion, so only |Ω| is physical here.
///
/// Errors with an under-resolution message when the windowed sampling
/// provides fewer than 8 samples per period.
pub fn fit_damped_oscillation(
    times: &[f64],
    py: &[f64],
    pz: &[f64],
    window: (f64, f64),
) -> Result<FitReport> {
    check_same_len(times, py)?;
    check_same_len(times, pz)?;
    let range = select(times, window)?;
    let n = range.len();
    if n < 10 {
        return Err(Error::InvalidParameter {
            name: "window",
            message: format!("need at least 10 samples in the window, found {n}"),
        });
    }
    let t0 = times[range.start];
    let taus: Vec<f64> = times[range.clone()].iter().map(|&t| t - t0).collect();
    let zs: Vec<Complex64> = range
        .clone()
        .map(|i| Complex64::new(pz[i], py[i]))
        .collect();

    // Phase-increment statistics: seed for Ω (signed) and the sampling
    // resolution check.
    let mut sum_dphi = 0.0;
    let mut sum_abs_dphi = 0.0;
    let mut n_pairs = 0usize;
    for k in 1..zs.len() {
        if zs[k - 1].norm_sqr() > 0.0 && zs[k].norm_sqr() > 0.0 {
            let dphi = (zs[k] * zs[k - 1].conj()).arg();
            sum_dphi += dphi;
            sum_abs_dphi += dphi.abs();
            n_pairs += 1;
        }
    }
    if n_pairs == 0 {
        return Err(Error::FitFailed("series is identically zero".into()));
    }
    let mean_abs_dphi = sum_abs_dphi / n_pairs as f64;
    if mean_abs_dphi > MAX_PHASE_STEP {
        return Err(Error::UnderResolved(format!(
            "mean phase advance {:.3} rad/sample exceeds the 8-samples-per-period \
             limit ({:.3} rad/sample)",
            mean_abs_dphi, MAX_PHASE_STEP
        )));
    }
    let mean_dtau = (taus[taus.len() - 1] - taus[0]) / (taus.len() - 1) as f64;
    let omega_seed = sum_dphi / n_pairs as f64 / mean_dtau;

    // Amplitude/decay seed from the log-magnitude regression.
    let mut lt = Vec::new();
    let mut lm = Vec::new();
    for (&tau, z) in taus.iter().zip(&zs) {
        let m = z.norm();
        if m > 0.0 {
            lt.push(tau);
            lm.push(m.ln());
        }
    }
    if lt.len() < 2 {
        return Err(Error::FitFailed(
            "too few nonzero samples for magnitude seeding".into(),
        ));
    }
    let (slope, intercept, _, _) = linear_ls(&lt, &lm);
    let a_seed = intercept.exp();
    let lambda_seed = -slope;
    let phi_seed = zs[0].arg();

    // Parameters p = (a, φ, λ, Ω); residuals stacked Re/Im.
    let mut p = Vector4::new(a_seed.max(1e-300), phi_seed, lambda_seed, omega_seed);
    let model = |p: &Vector4<f64>, tau: f64| -> Complex64 {
        Complex64::from_polar(p[0] * (-p[2] * tau).exp(), p[3] * tau + p[1])
    };
    let ssr_at = |p: &Vector4<f64>| -> f64 {
        taus.iter()
            .zip(&zs)
            .map(|(&tau, &z)| (model(p, tau) - z).norm_sqr())
            .sum()
    };
    let mut ssr = ssr_at(&p);
    let mut normal = Matrix4::<f64>::zeros();
    for iter in 0..MAX_ITERATIONS {
        let mut a_mat = Matrix4::<f64>::zeros();
        let mut g = Vector4::<f64>::zeros();
        for (&tau, &z) in taus.iter().zip(&zs) {
            let zm = model(&p, tau);
            let res = zm - z;
            let d = [
                zm / p[0],
                Complex64::I * zm,
                -tau * zm,
                Complex64::I * tau * zm,
            ];
            for j in 0..4 {
                g[j] += (d[j].conj() * res).re;
                for k in j..4 {
                    a_mat[(j, k)] += (d[j].conj() * d[k]).re;
                }
            }
        }
        for j in 0..4 {
            for k in 0..j {
                a_mat[(j, k)] = a_mat[(k, j)];
            }
        }
        normal = a_mat;
        let mut boost = 0.0;
        let delta = loop {
            let mut trial = a_mat;
            for j in 0..4 {
                trial[(j, j)] += boost * (1.0 + a_mat[(j, j)].abs());
            }
            if let Some(d) = trial.lu().solve(&(-g)) {
                break d;
            }
            boost = if boost == 0.0 { 1e-10 } else { boost * 100.0 };
            if boost > 1e6 {
                return Err(Error::FitFailed(
                    "singular normal equations in oscillation fit".into(),
                ));
            }
        };
        let mut step = delta;
        let mut halvings = 0;
        loop {
            let trial = p + step;
            if trial[0] > 0.0 {
                let next = ssr_at(&trial);
                if next <= ssr || halvings >= MAX_HALVINGS {
                    if next <= ssr {
                        p = trial;
                        ssr = next;
                    }
                    break;
                }
            }
            step *= 0.5;
            halvings += 1;
            if halvings >= MAX_HALVINGS {
                break;
            }
        }
        let rel_step = (0..4).fold(0.0f64, |acc, j| acc.max(step[j].abs() / (1.0 + p[j].abs())));
        if rel_step <= STEP_TOL || ssr == 0.0 {
            break;
        }
        if iter == MAX_ITERATIONS - 1 {
            let scale = zs.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
            if (ssr / (2.0 * n as f64)).sqrt() > 1e-6 * scale {
                return Err(Error::FitFailed(format!(
                    "oscillation fit did not converge after {MAX_ITERATIONS} iterations"
                )));
            }
        }
    }

    let s2 = ssr / (2.0 * n as f64 - 4.0).max(1.0);
    let sigmas = match normal.try_inverse() {
        Some(inv) => [
            (inv[(0, 0)] * s2).max(0.0).sqrt(),
            (inv[(1, 1)] * s2).max(0.0).sqrt(),
            (inv[(2, 2)] * s2).max(0.0).sqrt(),
            (inv[(3, 3)] * s2).max(0.0).sqrt(),
        ],
        None => [0.0; 4],
    };
    let mut phase = p[1].rem_euclid(std::f64::consts::TAU);
    if phase > std::f64::consts::PI {
        phase -= std::f64::consts::TAU;
    }
    Ok(FitReport {
        model: "damped-oscillation".into(),
        params: vec![
            FitParam {
                name: "amplitude",
                value: p[0],
                sigma: sigmas[0],
            },
            FitParam {
                name: "phase",
                value: phase,
                sigma: sigmas[1],
            },
            FitParam {
                name: "decay_rate",
                value: p[2],
                sigma: sigmas[2],
            },
            FitParam {
                name: "angular_frequency",
                value: p[3].abs(),
                sigma: sigmas[3],
            },
        ],
        residual_rms: (ssr / (2.0 * n as f64)).sqrt(),
        window,
        n_points: n,
    })
}

/// Default window for the early linear regime of the drain record: the
/// first 50 µs.
pub const DEFAULT_SLOPE_WINDOW: (f64, f64) = (0.0, 50e-6);

/// Linear least-squares slope of `values` over the window (default:
/// the first 50 µs).
pub fn initial_slope(times: &[f64], values: &[f64], window: Option<(f64, f64)>) -> Result<f64> {
    check_same_len(times, values)?;
    let window = window.unwrap_or(DEFAULT_SLOPE_WINDOW);
    let range = select(times, window)?;
    if range.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "window",
            message: format!(
                "need at least 2 samples in the window, found {}",
                range.len()
            ),
        });
    }
    let (slope, _, _, _) = linear_ls(&times[range.clone()], &values[range]);
    Ok(slope)
}

/// Default start of the late-time window for the tail drain rate: 0.2 ms.
pub const DEFAULT_PLATEAU_T_AFTER: f64 = 0.2e-3;

/// Mean late-time drain rate: the least-squares slope of `values` over
/// all samples with `t ≥ t_after` (default 0.2 ms). Errors when the tail
/// holds fewer than 10 samples.
pub fn plateau_rate(times: &[f64], values: &[f64], t_after: Option<f64>) -> Result<f64> {
    check_same_len(times, values)?;
    let t_after = t_after.unwrap_or(DEFAULT_PLATEAU_T_AFTER);
    if !t_after.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t_after",
            message: format!("tail start must be finite, got {t_after}"),
        });
    }
    let start = times.partition_point(|&t| t < t_after);
    let n = times.len() - start;
    if n < 10 {
        return Err(Error::InvalidParameter {
            name: "t_after",
            message: format!("tail window needs at least 10 samples, found {n}"),
        });
    }
    let (slope, _, _, _) = linear_ls(&times[start..], &values[start..]);
    Ok(slope)
}

/// First time at which the averaged polarization magnitude falls below
/// e⁻¹ of its initial value, located by linear interpolation between the
/// bracketing samples. Errors if the threshold is never reached.
pub fn decoherence_time(times: &[f64], avg_p: &[PolarizationVector]) -> Result<f64> {
    if times.len() != avg_p.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: avg_p.len(),
        });
    }
    if times.is_empty() {
        return Err(Error::InvalidParameter {
            name: "times",
            message: "empty series".into(),
        });
    }
    let r0 = avg_p[0].norm();
    if r0.is_nan() || r0 <= 0.0 {
        return Err(Error::InvalidState(
            "initial averaged polarization is zero; no decay scale".into(),
        ));
    }
    let threshold = r0 / std::f64::consts::E;
    let mut prev = r0;
    for k in 1..times.len() {
        let cur = avg_p[k].norm();
        if cur <= threshold {
            let frac = if prev > cur {
                (prev - threshold) / (prev - cur)
            } else {
                1.0
            };
            return Ok(times[k - 1] + frac * (times[k] - times[k - 1]));
        }
        prev = cur;
    }
    Err(Error::FitFailed(
        "averaged polarization never falls to e⁻¹ of its initial magnitude \
         within the recorded horizon"
            .into(),
    ))
}

/// Fits the tail of a drain record to a saturating exponential
/// `y(t) = n − (n − y_s)·exp(−r·(t − t_s))`, anchored at the first
/// sample with `t ≥ t_s`. Reports `rate`, plus the anchored `asymptote`
/// and `anchor_value` with zero uncertainty.
///
/// A record already sitting at the asymptote has no decay scale and is
/// reported as a failed fit.
pub fn asymptotic_pxd_check(times: &[f64], pxd: &[f64], t_s: f64, n: f64) -> Result<FitReport> {
    check_same_len(times, pxd)?;
    if !t_s.is_finite() || !n.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t_s",
            message: "anchor time and asymptote must be finite".into(),
        });
    }
    let start = times.partition_point(|&t| t < t_s);
    let count = times.len() - start;
    if count < 10 {
        return Err(Error::InvalidParameter {
            name: "t_s",
            message: format!("need at least 10 samples past the anchor, found {count}"),
        });
    }
    let t_anchor = times[start];
    let y_s = pxd[start];
    let c = n - y_s;
    if c.abs() <= 1e-12 * n.abs().max(1.0) {
        return Err(Error::FitFailed(
            "record already at the asymptote; approach rate is indeterminate".into(),
        ));
    }
    let taus: Vec<f64> = times[start..].iter().map(|&t| t - t_anchor).collect();
    let ys: Vec<f64> = pxd[start..].to_vec();

    // Seed from the endpoint ratio when it is usable, else from the
    // reciprocal of the tail span.
    let tau_end = *taus.last().unwrap();
    let ratio = (n - ys[ys.len() - 1]) / c;
    let seed = if ratio > 0.0 && ratio < 1.0 && tau_end > 0.0 {
        -ratio.ln() / tau_end
    } else {
        1.0 / tau_end.max(f64::MIN_POSITIVE)
    };

    let (rate, sigma, ssr) = fit_rate_1p(&taus, &ys, seed, |r, tau| {
        let e = (-r * tau).exp();
        (n - c * e, c * tau * e)
    })?;
    Ok(FitReport {
        model: "plateau".into(),
        params: vec![
            FitParam {
                name: "rate",
                value: rate,
                sigma,
            },
            FitParam {
                name: "asymptote",
                value: n,
                sigma: 0.0,
            },
            FitParam {
                name: "anchor_value",
                value: y_s,
                sigma: 0.0,
            },
        ],
        residual_rms: (ssr / count as f64).sqrt(),
        window: (t_anchor, *times.last().unwrap()),
        n_points: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA: f64 = 26_184.067_826_981_8;
    const OMEGA: f64 = 3.0e7;

    fn grid(dt: f64, t_max: f64) -> Vec<f64> {
        let n = (t_max / dt).round() as usize;
        (0..=n).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn exponential_fit_recovers_synthetic_rate() {
        let times = grid(6.58e-7, 2.0e-4);
        let rate_true = 2.0 * LAMBDA;
        let values: Vec<f64> = times.iter().map(|&t| (-rate_true * t).exp()).collect();
        let report = fit_exponential(&times, &values, (0.0, 2.0e-4)).unwrap();
        let fitted = report.value("rate");
        assert!(
            (fitted - rate_true).abs() / rate_true < 1e-3,
            "fitted {fitted}, expected {rate_true}"
        );
        assert!((fitted - 52_368.135_653_963_6).abs() / rate_true < 1e-9);
        assert_eq!(report.value("amplitude"), 1.0);
        assert!(report.param("rate").unwrap().sigma >= 0.0);
        assert!(report.residual_rms < 1e-10);
        assert_eq!(report.model, "exponential");
    }

    #[test]
    fn exponential_fit_constant_series_gives_zero_rate() {
        let times = grid(1e-6, 1e-4);
        let values = vec![0.7; times.len()];
        let report = fit_exponential(&times, &values, (0.0, 1e-4)).unwrap();
        assert!(report.value("rate").abs() < 1e-9);
    }

    #[test]
    fn exponential_fit_anchors_amplitude_at_window_start() {
        let times = grid(1e-6, 1e-4);
        let values: Vec<f64> = times.iter().map(|&t| 0.5 * (-3.0e4 * t).exp()).collect();
        let report = fit_exponential(&times, &values, (2e-5, 1e-4)).unwrap();
        let start = times.partition_point(|&t| t < 2e-5);
        assert_eq!(report.value("amplitude"), values[start]);
        assert!((report.value("rate") - 3.0e4).abs() / 3.0e4 < 1e-6);
    }

    #[test]
    fn exponential_fit_rejects_bad_input() {
        let times = grid(1e-6, 1e-4);
        let values = vec![1.0; times.len()];
        // Too few points in window.
        assert!(fit_exponential(&times, &values, (0.0, 5e-6)).is_err());
        // Non-positive start.
        let neg = vec![-1.0; times.len()];
        assert!(fit_exponential(&times, &neg, (0.0, 1e-4)).is_err());
        // Inverted window.
        assert!(fit_exponential(&times, &values, (1e-4, 0.0)).is_err());
        // Length mismatch.
        assert!(fit_exponential(&times, &values[1..], (0.0, 1e-4)).is_err());
    }

    #[test]
    fn damped_oscillation_fit_recovers_synthetic_parameters() {
        let omega_rot = (OMEGA * OMEGA - LAMBDA * LAMBDA).sqrt();
        let times = grid(6.58e-9, 5.0e-5);
        // Physical rotation sense: z = exp(−λt)·exp(−iΩt).
        let py: Vec<f64> = times
            .iter()
            .map(|&t| -(-LAMBDA * t).exp() * (omega_rot * t).sin())
            .collect();
        let pz: Vec<f64> = times
            .iter()
            .map(|&t| (-LAMBDA * t).exp() * (omega_rot * t).cos())
            .collect();
        let report = fit_damped_oscillation(&times, &py, &pz, (0.0, 5.0e-5)).unwrap();
        let lam = report.value("decay_rate");
        let om = report.value("angular_frequency");
        assert!((lam - LAMBDA).abs() / LAMBDA < 1e-3, "λ̂ = {lam}");
        assert!((om - omega_rot).abs() / omega_rot < 1e-3, "Ω̂ = {om}");
        assert!((report.value("amplitude") - 1.0).abs() < 1e-6);
        for p in &report.params {
            assert!(p.sigma >= 0.0);
        }
        assert_eq!(report.model, "damped-oscillation");
    }

    #[test]
    fn damped_oscillation_fit_zero_damping() {
        let times = grid(6.58e-9, 2.0e-5);
        let py: Vec<f64> = times.iter().map(|&t| -(OMEGA * t).sin()).collect();
        let pz: Vec<f64> = times.iter().map(|&t| (OMEGA * t).cos()).collect();
        let report = fit_damped_oscillation(&times, &py, &pz, (0.0, 2.0e-5)).unwrap();
        assert!(report.value("decay_rate").abs() < 1e-6 * OMEGA);
        assert!((report.value("angular_frequency") - OMEGA).abs() / OMEGA < 1e-10);
    }

    #[test]
    fn damped_oscillation_fit_flags_under_resolved_sampling() {
        // 4 samples per period: mean phase step π/2 > 2π/8.
        let period = std::f64::consts::TAU / OMEGA;
        let times = grid(period / 4.0, 40.0 * period);
        let py: Vec<f64> = times.iter().map(|&t| -(OMEGA * t).sin()).collect();
        let pz: Vec<f64> = times.iter().map(|&t| (OMEGA * t).cos()).collect();
        let err = fit_damped_oscillation(&times, &py, &pz, (0.0, 40.0 * period)).unwrap_err();
        assert!(matches!(err, Error::UnderResolved(_)), "got {err:?}");
    }

    #[test]
    fn initial_slope_is_exact_on_a_line_and_respects_the_window() {
        let times = grid(1e-6, 2e-4);
        // Slope 3000 before 50 µs, slope 0 after.
        let values: Vec<f64> = times
            .iter()
            .map(|&t| {
                if t <= 50e-6 {
                    3000.0 * t
                } else {
                    3000.0 * 50e-6
                }
            })
            .collect();
        let slope = initial_slope(&times, &values, None).unwrap();
        assert!((slope - 3000.0).abs() / 3000.0 < 1e-12);
        let tail = initial_slope(&times, &values, Some((1e-4, 2e-4))).unwrap();
        assert!(tail.abs() < 1e-9);
    }

    #[test]
    fn plateau_rate_recovers_tail_slope() {
        let times = grid(1e-6, 4e-4);
        let values: Vec<f64> = times
            .iter()
            .map(|&t| {
                if t < 0.2e-3 {
                    10.0 * t
                } else {
                    10.0 * 0.2e-3 + 2000.0 * (t - 0.2e-3)
                }
            })
            .collect();
        let rate = plateau_rate(&times, &values, None).unwrap();
        assert!((rate - 2000.0).abs() / 2000.0 < 1e-10);
        // Tail with fewer than 10 samples is refused.
        assert!(plateau_rate(&times, &values, Some(3.95e-4)).is_err());
    }

    #[test]
    fn decoherence_time_matches_pure_exponential() {
        let rate = 2.0 * LAMBDA;
        let times = grid(1e-7, 1e-4);
        let avg_p: Vec<PolarizationVector> = times
            .iter()
            .map(|&t| PolarizationVector::new((-rate * t).exp(), 0.0, 0.0))
            .collect();
        let tau = decoherence_time(&times, &avg_p).unwrap();
        let expected = 1.0 / rate;
        assert!(
            (tau - expected).abs() / expected < 1e-3,
            "τ̂ = {tau}, expected {expected}"
        );
    }

    #[test]
    fn decoherence_time_errors_when_never_crossing() {
        let times = grid(1e-6, 1e-4);
        let avg_p: Vec<PolarizationVector> = times
            .iter()
            .map(|_| PolarizationVector::new(0.9, 0.0, 0.0))
            .collect();
        assert!(matches!(
            decoherence_time(&times, &avg_p),
            Err(Error::FitFailed(_))
        ));
    }

    #[test]
    fn asymptotic_fit_recovers_two_quantum_drain_curve() {
        let a_fi = 6000.0;
        let t_s = 0.2e-3;
        let y_s = 0.3;
        let times = grid(1e-6, 1.5e-3);
        let values: Vec<f64> = times
            .iter()
            .map(|&t| {
                if t < t_s {
                    y_s * t / t_s
                } else {
                    2.0 - (2.0 - y_s) * (-a_fi * (t - t_s)).exp()
                }
            })
            .collect();
        let report = asymptotic_pxd_check(&times, &values, t_s, 2.0).unwrap();
        let rate = report.value("rate");
        assert!((rate - a_fi).abs() / a_fi < 1e-3, "rate = {rate}");
        assert_eq!(report.value("asymptote"), 2.0);
        assert_eq!(report.model, "plateau");
    }

    #[test]
    fn asymptotic_fit_flags_flat_record_at_the_asymptote() {
        let times = grid(1e-6, 1e-3);
        let values = vec![1.0; times.len()];
        let err = asymptotic_pxd_check(&times, &values, 0.2e-3, 1.0).unwrap_err();
        assert!(matches!(err, Error::FitFailed(_)), "got {err:?}");
    }

    #[test]
    fn fit_reports_serialize_to_json() {
        let times = grid(1e-6, 1e-4);
        let values: Vec<f64> = times.iter().map(|&t| (-1e4 * t).exp()).collect();
        let report = fit_exponential(&times, &values, (0.0, 1e-4)).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["model"], "exponential");
        assert_eq!(json["params"][0]["name"], "rate");
        assert!(json["n_points"].as_u64().unwrap() >= 10);
    }
}
