//! Rescaled observables of the three limit regimes and exchangeable-pair
//! diagnostics.
//!
//! Each regime has its own normalization of the total spin:
//!
//! - subcritical (`β < 3`): `W = sqrt((3-β)/n) · S`, a 3-vector converging
//!   to a standard Gaussian;
//! - supercritical (`β > 3`): `W = sqrt(n) (β²|S|²/(n²k₂²) - 1)`, a scalar
//!   fluctuation of the squared magnetization around its concentration
//!   point;
//! - critical (`β = 3`): `W = c₃|S|²/n^{3/2}` with `c₃` calibrated so that
//!   the sample mean of `W` is one.
//!
//! The pair diagnostics replay the construction behind the limit theorems:
//! from stationary snapshots, a single site is resampled from its
//! conditional law many times, and the conditional drift `E[W' - W | σ]`
//! and quadratic variation `E[(W' - W)² | σ]` are regressed against their
//! predicted forms.

use crate::analytic::{self, Regime};
use crate::rng::{stream, Purpose};
use crate::sampler::{sample_vmf, Configuration};
use crate::stats;
use crate::vec3::Vec3;
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Second-moment coefficients of the conditional single-spin law with
/// concentration `c`: `E[θθᵀ] = a_par·P + a_perp·P⊥` and `E[θ] = a_cross·r`,
/// where `P` projects onto the tilt direction `r`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MomentCoefficients {
    pub a_par: f64,
    pub a_perp: f64,
    pub a_cross: f64,
}

/// Closed forms: `a_par = 1 - 2L(c)/c`, `a_perp = L(c)/c`, `a_cross = L(c)`,
/// with the exact limits `(1/3, 1/3, 0)` at `c = 0`.
///
/// The trace identity `a_par + 2 a_perp = 1` holds exactly by construction.
pub fn conditional_moment_coefficients(c: f64) -> Result<MomentCoefficients> {
    if !(c >= 0.0) {
        return Err(Error::domain(format!("concentration must be >= 0, got {c}")));
    }
    let ratio = if c < 0.05 {
        // L(c)/c as a series, avoiding the 0/0 at the origin.
        let c2 = c * c;
        1.0 / 3.0 + c2 * (-1.0 / 45.0 + c2 * (2.0 / 945.0 - c2 / 4725.0))
    } else {
        analytic::langevin(c)? / c
    };
    Ok(MomentCoefficients {
        a_par: 1.0 - 2.0 * ratio,
        a_perp: ratio,
        a_cross: ratio * c,
    })
}

/// Subcritical observable `W = sqrt((3-β)/n) · S` for `β < 3`.
pub fn subcritical_observable(total: Vec3, n: usize, beta: f64) -> Result<Vec3> {
    if !(beta < 3.0) {
        return Err(Error::domain(format!(
            "subcritical observable requires beta < 3, got {beta}"
        )));
    }
    Ok(total * ((3.0 - beta) / n as f64).sqrt())
}

/// Supercritical observable `W = sqrt(n) (β²|S|²/(n²k₂²) - 1)` for `β > 3`.
pub fn supercritical_observable(total_norm_sq: f64, n: usize, beta: f64) -> Result<f64> {
    let k2 = analytic::order_parameter(beta)?; // rejects beta <= 3
    let n_f = n as f64;
    Ok(n_f.sqrt() * (beta * beta * total_norm_sq / (n_f * n_f * k2 * k2) - 1.0))
}

/// Critical observable `W = c₃|S|²/n^{3/2}`; nonnegative by construction.
pub fn critical_observable(total_norm_sq: f64, n: usize, c3: f64) -> f64 {
    c3 * total_norm_sq / (n as f64).powf(1.5)
}

/// Empirical normalizer of the critical observable.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CriticalCalibration {
    /// `n^{3/2} / mean(|S|²)`: makes the sample mean of `W` exactly one.
    pub c3_hat: f64,
    /// Companion density parameter `1/(5 c3_hat)`.
    pub c_hat: f64,
    pub n_used: usize,
    /// Standard error of `c3_hat` from the autocorrelation-adjusted mean.
    pub se: f64,
}

/// Calibrates `c₃` from a stationary `|S|²` series at the critical coupling.
pub fn calibrate_c3(s2_series: &[f64], n: usize) -> Result<CriticalCalibration> {
    if s2_series.is_empty() {
        return Err(Error::InsufficientData("empty series in c3 calibration".into()));
    }
    if n < 500 {
        return Err(Error::domain("critical calibration expects n >= 500"));
    }
    let m = s2_series.len() as f64;
    let mean = s2_series.iter().sum::<f64>() / m;
    let var = s2_series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let ess = stats::effective_sample_size(s2_series).unwrap_or(m);
    let n32 = (n as f64).powf(1.5);
    let c3_hat = n32 / mean;
    // Delta method: c3 = n^{3/2}/mean.
    let se = c3_hat * (var / ess).sqrt() / mean;
    Ok(CriticalCalibration { c3_hat, c_hat: 1.0 / (5.0 * c3_hat), n_used: n, se })
}

/// A fitted linear relation `y ≈ slope·x + intercept` with residual scale.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DriftFit {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    /// Mean absolute residual about the slope-only prediction; the
    /// intercept is counted as part of the residual.
    pub residual_norm: f64,
}

fn ols(xs: &[f64], ys: &[f64]) -> DriftFit {
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let slope_se = (ss_res / (m - 2.0).max(1.0) / sxx).sqrt();
    let residual_norm = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x).abs())
        .sum::<f64>()
        / m;
    DriftFit { slope, slope_se, intercept, residual_norm }
}

/// Exchangeable-pair diagnostics: fitted single-step drift and quadratic
/// variation against the regime's predicted coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairDiagnostics {
    pub regime: Regime,
    /// Fitted drift rate (sign-flipped slope for sub/supercritical; the
    /// slope against `1 - c_hat W²` at criticality).
    pub lambda_hat: f64,
    pub lambda_se: f64,
    /// Predicted value of the same coefficient.
    pub lambda_theory: f64,
    /// Mean absolute lack of fit of the drift regression.
    pub drift_residual_norm: f64,
    /// Empirical quadratic variation against its predicted value
    /// (slope ratio at criticality, level ratio otherwise).
    pub quad_var_ratio: f64,
    pub replicates: usize,
    pub snapshots: usize,
    /// Critical runs only: the calibration used for the observable.
    pub calibration: Option<CriticalCalibration>,
}

/// Per-snapshot conditional moments of the one-step observable increment.
struct SnapshotMoments {
    w: f64,
    drift: f64,
    quad_var: f64,
}

fn resample_increment<R: Rng + ?Sized>(
    cfg: &Configuration,
    beta: f64,
    rng: &mut R,
) -> (Vec3, Vec3, usize) {
    let n = cfg.n();
    let i = rng.random_range(0..n);
    let old = cfg.spins()[i];
    let rest = cfg.total() - old;
    let norm = rest.norm();
    let new = if norm < 1e-12 {
        crate::sampler::uniform_spin(rng)
    } else {
        sample_vmf(rest * (1.0 / norm), beta * norm / n as f64, rng).expect("unit direction")
    };
    (old, new, i)
}

/// Runs the conditional-resampling diagnostics on stationary snapshots.
///
/// For every snapshot, `replicates` single-site resamples estimate the
/// conditional drift and quadratic variation of the regime observable; the
/// drift is then regressed on the predicted regressor (the observable for
/// the Gaussian regimes, `1 - c_hat W²` at criticality).
pub fn pair_diagnostics(
    snapshots: &[Configuration],
    beta: f64,
    replicates: usize,
    seed: u64,
) -> Result<PairDiagnostics> {
    if replicates < 100 {
        return Err(Error::InsufficientData("pair diagnostics need >= 100 replicates".into()));
    }
    if snapshots.len() < 10 {
        return Err(Error::InsufficientData("pair diagnostics need >= 10 snapshots".into()));
    }
    let n = snapshots[0].n();
    let n_f = n as f64;
    let regime = Regime::of(beta);

    // Critical runs calibrate c3 from the snapshots themselves.
    let calibration = if regime == Regime::Critical {
        let s2: Vec<f64> = snapshots.iter().map(|c| c.total_norm_sq()).collect();
        let m = s2.len() as f64;
        let mean = s2.iter().sum::<f64>() / m;
        let n32 = n_f.powf(1.5);
        let c3_hat = n32 / mean;
        Some(CriticalCalibration { c3_hat, c_hat: 1.0 / (5.0 * c3_hat), n_used: n, se: f64::NAN })
    } else {
        None
    };

    let k2 = if regime == Regime::Supercritical {
        analytic::order_parameter(beta)?
    } else {
        0.0
    };
    let c3 = calibration.map(|c| c.c3_hat).unwrap_or(0.0);

    let moments: Vec<SnapshotMoments> = snapshots
        .par_iter()
        .enumerate()
        .map(|(si, cfg)| {
            let mut rng = stream(seed, si as u64, Purpose::PairReplicas);
            let s2_old = cfg.total_norm_sq();
            let mut drift = 0.0;
            let mut quad = 0.0;
            match regime {
                Regime::Subcritical => {
                    // Increment of the vector observable; drift and quadratic
                    // variation are projected on the current W direction and
                    // traced, respectively.
                    let scale = ((3.0 - beta) / n_f).sqrt();
                    let w_vec = cfg.total() * scale;
                    let w_norm = w_vec.norm().max(1e-12);
                    let w_dir = w_vec * (1.0 / w_norm);
                    for _ in 0..replicates {
                        let (old, new, _) = resample_increment(cfg, beta, &mut rng);
                        let dw = (new - old) * scale;
                        drift += dw.dot(w_dir);
                        quad += dw.norm_sq();
                    }
                    SnapshotMoments {
                        w: w_norm,
                        drift: drift / replicates as f64,
                        quad_var: quad / replicates as f64,
                    }
                }
                Regime::Supercritical => {
                    let w = supercritical_observable(s2_old, n, beta).expect("beta > 3");
                    for _ in 0..replicates {
                        let (old, new, _) = resample_increment(cfg, beta, &mut rng);
                        let s2_new = (cfg.total() - old + new).norm_sq();
                        let dw = n_f.sqrt() * beta * beta * (s2_new - s2_old) / (n_f * n_f * k2 * k2);
                        drift += dw;
                        quad += dw * dw;
                    }
                    SnapshotMoments {
                        w,
                        drift: drift / replicates as f64,
                        quad_var: quad / replicates as f64,
                    }
                }
                Regime::Critical => {
                    let w = critical_observable(s2_old, n, c3);
                    for _ in 0..replicates {
                        let (old, new, _) = resample_increment(cfg, beta, &mut rng);
                        let s2_new = (cfg.total() - old + new).norm_sq();
                        let dw = c3 * (s2_new - s2_old) / n_f.powf(1.5);
                        drift += dw;
                        quad += dw * dw;
                    }
                    SnapshotMoments {
                        w,
                        drift: drift / replicates as f64,
                        quad_var: quad / replicates as f64,
                    }
                }
            }
        })
        .collect();

    let (lambda_hat, lambda_se, lambda_theory, drift_residual_norm, quad_var_ratio) = match regime {
        Regime::Subcritical | Regime::Supercritical => {
            let xs: Vec<f64> = moments.iter().map(|m| m.w).collect();
            let ys: Vec<f64> = moments.iter().map(|m| m.drift).collect();
            let fit = ols(&xs, &ys);
            let lambda_theory = analytic::drift_rate_coefficient(beta)? / n_f;
            // Predicted per-step quadratic variation level.
            let theory_qv = match regime {
                Regime::Subcritical => 2.0 * lambda_theory * 3.0, // trace of 2ΛΣ, Σ = Id₃
                _ => 2.0 * lambda_theory * analytic::supercritical_variance(beta)?,
            };
            let mean_qv = moments.iter().map(|m| m.quad_var).sum::<f64>() / moments.len() as f64;
            (-fit.slope, fit.slope_se, lambda_theory, fit.residual_norm, mean_qv / theory_qv)
        }
        Regime::Critical => {
            let cal = calibration.expect("critical calibration present");
            // Drift against 1 - c_hat W²; slope predicted to be 3k.
            let xs: Vec<f64> = moments.iter().map(|m| 1.0 - cal.c_hat * m.w * m.w).collect();
            let ys: Vec<f64> = moments.iter().map(|m| m.drift).collect();
            let fit = ols(&xs, &ys);
            let k_theory = 2.0 * cal.c3_hat / (3.0 * n_f.powf(1.5));
            // Quadratic variation against W; slope predicted to be k.
            let ws: Vec<f64> = moments.iter().map(|m| m.w).collect();
            let qs: Vec<f64> = moments.iter().map(|m| m.quad_var).collect();
            let qfit = ols(&ws, &qs);
            (fit.slope, fit.slope_se, 3.0 * k_theory, fit.residual_norm, qfit.slope / k_theory)
        }
    };

    Ok(PairDiagnostics {
        regime,
        lambda_hat,
        lambda_se,
        lambda_theory,
        drift_residual_norm,
        quad_var_ratio,
        replicates,
        snapshots: snapshots.len(),
        calibration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{init_uniform, run_chain_observe, ChainParams};
    use crate::stein;

    #[test]
    fn subcritical_observable_special_configurations() {
        let n = 100;
        let up = Vec3::new(0.0, 0.0, 1.0);
        // All spins identical: |W| = sqrt((3 - beta) n).
        let aligned = Configuration::from_spins(vec![up; n]).unwrap();
        let w = subcritical_observable(aligned.total(), n, 2.0).unwrap();
        assert!((w.norm() - (1.0 * n as f64).sqrt()).abs() < 1e-9);
        // Antipodal pairs cancel exactly.
        let mut spins = Vec::new();
        for i in 0..n {
            spins.push(if i % 2 == 0 { up } else { -up });
        }
        let paired = Configuration::from_spins(spins).unwrap();
        let w = subcritical_observable(paired.total(), n, 2.0).unwrap();
        assert_eq!(w.norm(), 0.0);
        assert!(subcritical_observable(up, n, 3.0).is_err());
    }

    #[test]
    fn supercritical_observable_centering() {
        let beta = 5.0;
        let n = 400;
        let k2 = analytic::order_parameter(beta).unwrap();
        // |S| = n k2 / beta exactly: W = 0.
        let s2 = (n as f64 * k2 / beta).powi(2);
        let w = supercritical_observable(s2, n, beta).unwrap();
        assert!(w.abs() < 1e-10);
        assert!(supercritical_observable(1.0, n, 2.0).is_err());
    }

    #[test]
    fn critical_observable_nonnegative_and_calibration_identity() {
        let s2 = vec![900.0, 1600.0, 400.0, 2500.0];
        for &v in &s2 {
            assert!(critical_observable(v, 1000, 0.9) >= 0.0);
        }
        let series: Vec<f64> = (0..600).map(|i| 1000.0 + (i % 7) as f64 * 100.0).collect();
        let cal = calibrate_c3(&series, 1000).unwrap();
        let mean_w: f64 = series
            .iter()
            .map(|&v| critical_observable(v, 1000, cal.c3_hat))
            .sum::<f64>()
            / series.len() as f64;
        assert!((mean_w - 1.0).abs() < 1e-12);
        assert!(cal.c3_hat > 0.0 && cal.c_hat > 0.0);
        assert!(calibrate_c3(&[], 1000).is_err());
        assert!(calibrate_c3(&series, 100).is_err());
    }

    #[test]
    fn moment_coefficients_limits_and_trace() {
        let m0 = conditional_moment_coefficients(0.0).unwrap();
        assert!((m0.a_par - 1.0 / 3.0).abs() < 1e-15);
        assert!((m0.a_perp - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m0.a_cross, 0.0);
        for c in [0.1, 1.0, 5.0, 20.0] {
            let m = conditional_moment_coefficients(c).unwrap();
            assert!((m.a_par + 2.0 * m.a_perp - 1.0).abs() < 1e-12, "c = {c}");
            assert!((m.a_cross - analytic::langevin(c).unwrap()).abs() < 1e-13);
        }
        assert!(conditional_moment_coefficients(-1.0).is_err());
    }

    #[test]
    fn moment_coefficients_match_sphere_quadrature() {
        for c in [0.5, 2.0] {
            let closed = conditional_moment_coefficients(c).unwrap();
            let quad = stein::sphere_conditional_moments(c).unwrap();
            assert!((closed.a_par - quad.a_par).abs() < 1e-10, "c = {c}");
            assert!((closed.a_perp - quad.a_perp).abs() < 1e-10);
            assert!((closed.a_cross - quad.mean_coeff).abs() < 1e-10);
        }
    }

    #[test]
    fn conditional_covariance_trace_identity() {
        // trace E[(σ*-σᵢ)(σ*-σᵢ)ᵀ | σ] = 2(1 - L(c)<r, σᵢ>).
        let mut rng = stream(3, 0, Purpose::Direct);
        let cfg = init_uniform(64, &mut rng).unwrap();
        let beta = 2.5;
        let n_f = 64.0;
        let reps = 60_000;
        let i = 5usize;
        let old = cfg.spins()[i];
        let rest = cfg.total() - old;
        let c = beta * rest.norm() / n_f;
        let dir = rest * (1.0 / rest.norm());
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..reps {
            let new = sample_vmf(dir, c, &mut rng).unwrap();
            let d = (new - old).norm_sq();
            acc += d;
            acc2 += d * d;
        }
        let mean = acc / reps as f64;
        let var = acc2 / reps as f64 - mean * mean;
        let se = (var / reps as f64).sqrt();
        let expect = 2.0 * (1.0 - analytic::langevin(c).unwrap() * dir.dot(old));
        assert!((mean - expect).abs() < 4.0 * se, "mean {mean} vs {expect}");
    }

    fn collect_snapshots(n: usize, beta: f64, count: usize, spacing: u64, seed: u64) -> Vec<Configuration> {
        let mut snaps = Vec::with_capacity(count);
        let burnin = ChainParams::default_burnin(n);
        let params = ChainParams {
            n,
            beta,
            sweeps: burnin + spacing * count as u64,
            burnin,
            thin: spacing,
            seed,
            chain_id: 0,
            adaptive_burnin: false,
        };
        run_chain_observe(&params, |_, cfg| snaps.push(cfg.clone())).unwrap();
        snaps
    }

    #[test]
    fn pair_diagnostics_subcritical_slope() {
        let beta = 2.0;
        let n = 400;
        let snaps = collect_snapshots(n, beta, 600, 12, 17);
        let diag = pair_diagnostics(&snaps, beta, 4_000, 18).unwrap();
        let theory = (1.0 - beta / 3.0) / n as f64;
        assert_eq!(diag.regime, Regime::Subcritical);
        assert!(
            (diag.lambda_hat / theory - 1.0).abs() < 0.15,
            "lambda_hat {} vs {}",
            diag.lambda_hat,
            theory
        );
        assert!(diag.lambda_hat.is_finite());
    }

    #[test]
    fn pair_diagnostics_validates_inputs() {
        let mut rng = stream(4, 0, Purpose::Direct);
        let snaps = vec![init_uniform(16, &mut rng).unwrap()];
        assert!(pair_diagnostics(&snaps, 2.0, 1000, 1).is_err());
        let many: Vec<_> = (0..20).map(|_| init_uniform(16, &mut rng).unwrap()).collect();
        assert!(pair_diagnostics(&many, 2.0, 10, 1).is_err());
    }
}
