//! Distribution distances, chain diagnostics, and tail-rate regression.
//!
//! The estimators here are deliberately plain: one-sample and two-sample
//! Kolmogorov-Smirnov statistics, the one-dimensional Wasserstein-1 distance
//! through its quantile representation, effective sample size with Geyer's
//! initial-positive-sequence truncation, and exceedance-rate regression
//! against the analytic large-deviation rates. Bootstrap intervals use 200
//! percentile resamples with dedicated deterministic streams.

use crate::rng::{stream, Purpose};
use crate::sampler::{self, ChainParams};
use crate::{analytic, Error, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Metric {
    Ks,
    W1,
}

/// A distance estimate with a bootstrap interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceReport {
    pub metric: Metric,
    pub value: f64,
    /// 95% percentile bootstrap interval, widened if necessary so that it
    /// contains the point estimate.
    pub bootstrap_ci: (f64, f64),
    pub n_samples: usize,
    /// Name of the reference law.
    pub target: String,
}

fn sorted_copy(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// KS statistic of a pre-sorted sample against a CDF.
fn ks_stat_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: &F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max((f - (i + 1) as f64 / n).abs());
    }
    d
}

fn bootstrap_ci<S: Fn(&[f64]) -> f64 + Sync>(
    samples: &[f64],
    statistic: S,
    point: f64,
    seed: u64,
) -> (f64, f64) {
    let n = samples.len();
    let mut values: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64, Purpose::Bootstrap);
            let resample: Vec<f64> = (0..n).map(|_| samples[rng.random_range(0..n)]).collect();
            statistic(&resample)
        })
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = values[(0.025 * (BOOTSTRAP_RESAMPLES - 1) as f64).round() as usize];
    let hi = values[(0.975 * (BOOTSTRAP_RESAMPLES - 1) as f64).round() as usize];
    (lo.min(point), hi.max(point))
}

/// One-sample KS distance against `target_cdf`, with bootstrap CI.
pub fn ks_distance<F: Fn(f64) -> f64 + Sync>(
    samples: &[f64],
    target_cdf: F,
    target: &str,
    seed: u64,
) -> Result<DistanceReport> {
    if samples.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "ks_distance needs at least 100 samples, got {}",
            samples.len()
        )));
    }
    let sorted = sorted_copy(samples);
    let value = ks_stat_sorted(&sorted, &target_cdf);
    let ci = bootstrap_ci(samples, |s| ks_stat_sorted(&sorted_copy(s), &target_cdf), value, seed);
    Ok(DistanceReport {
        metric: Metric::Ks,
        value,
        bootstrap_ci: ci,
        n_samples: samples.len(),
        target: target.to_string(),
    })
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("two-sample KS needs nonempty inputs".into()));
    }
    let sa = sorted_copy(a);
    let sb = sorted_copy(b);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        if sa[i] <= sb[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Empirical Wasserstein-1 distance to a law given by its quantile function,
/// using plotting positions `(i - 1/2)/N`.
pub fn wasserstein1_empirical<Q: Fn(f64) -> f64 + Sync>(
    samples: &[f64],
    target_quantile: Q,
    target: &str,
    seed: u64,
) -> Result<DistanceReport> {
    if samples.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "wasserstein1 needs at least 100 samples, got {}",
            samples.len()
        )));
    }
    let w1 = |s: &[f64]| -> f64 {
        let sorted = sorted_copy(s);
        let n = sorted.len();
        sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - target_quantile((i as f64 + 0.5) / n as f64)).abs())
            .sum::<f64>()
            / n as f64
    };
    let value = w1(samples);
    let ci = bootstrap_ci(samples, w1, value, seed);
    Ok(DistanceReport {
        metric: Metric::W1,
        value,
        bootstrap_ci: ci,
        n_samples: samples.len(),
        target: target.to_string(),
    })
}

/// Effective sample size with Geyer's initial-positive-sequence rule:
/// `ESS = N / (1 + 2 Σ ρ̂_k)`, the sum truncated at the first nonpositive
/// paired autocorrelation. A constant series has ESS = N by convention.
pub fn effective_sample_size(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 100 {
        return Err(Error::InsufficientData(format!(
            "effective_sample_size needs at least 100 points, got {n}"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let gamma0 = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if gamma0 == 0.0 {
        return Ok(n as f64);
    }
    let acov = |k: usize| -> f64 {
        centered[..n - k]
            .iter()
            .zip(&centered[k..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let mut tau = 1.0;
    let mut k = 1;
    while k + 1 < n / 2 {
        let pair = (acov(k) + acov(k + 1)) / gamma0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    Ok(n as f64 / tau)
}

/// One exceedance-probability estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub exceedances: u64,
    pub samples: f64,
    /// `-(1/n) ln P̂[|M_n| ≥ x]`.
    pub rate_hat: f64,
    pub se: f64,
}

/// Empirical large-deviation rate of `P[|M_n| ≥ x]` across a grid of system
/// sizes, extrapolated linearly in `1/n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailRateFit {
    pub beta: f64,
    pub x_norm: f64,
    pub points: Vec<RatePoint>,
    /// Sizes dropped for lack of exceedances.
    pub dropped: Vec<usize>,
    pub extrapolated_rate: f64,
    /// Centered analytic rate at `x_norm`.
    pub theory_rate: f64,
    pub warnings: Vec<String>,
}

impl TailRateFit {
    /// Writes the per-size estimates as CSV with header `n,rate_hat,se`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,rate_hat,se")?;
        for p in &self.points {
            writeln!(w, "{},{},{}", p.n, p.rate_hat, p.se)?;
        }
        Ok(())
    }
}

/// Options for chain-based exceedance estimation at `β > 0`.
#[derive(Debug, Clone, Copy)]
pub struct ChainTailOptions {
    pub chains: usize,
    pub thin: u64,
}

impl Default for ChainTailOptions {
    fn default() -> Self {
        ChainTailOptions { chains: 8, thin: 1 }
    }
}

/// Estimates `P[|M_n| ≥ x_norm]` on `n_grid` and fits the rate.
///
/// At `β = 0` the replicates are exact i.i.d. uniform configurations; for
/// `β > 0` they are recorded sweeps of independent Gibbs chains and the
/// standard error uses the indicator's effective sample size. Sizes with no
/// observed exceedances are dropped with a warning; if every size drops, an
/// error is returned.
pub fn tail_rate_fit(
    beta: f64,
    x_norm: f64,
    n_grid: &[usize],
    replicates: usize,
    seed: u64,
    chain_opts: ChainTailOptions,
) -> Result<TailRateFit> {
    if x_norm <= 0.0 || x_norm >= 1.0 {
        return Err(Error::domain(
            "tail_rate_fit needs 0 < x_norm < 1; the rate degenerates at the minimizer",
        ));
    }
    if replicates < 10_000 {
        return Err(Error::InsufficientData(
            "tail probabilities need at least 10^4 replicates per size".into(),
        ));
    }
    if n_grid.is_empty() {
        return Err(Error::InsufficientData("empty size grid".into()));
    }

    let theory_rate = analytic::spin_rate(beta, x_norm)?.centered;
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    let mut warnings = Vec::new();

    for (ni, &n) in n_grid.iter().enumerate() {
        let (exceed, samples, ess) = if beta == 0.0 {
            let batch = 5_000usize;
            let batches = replicates.div_ceil(batch);
            let counts: Vec<(u64, u64)> = (0..batches)
                .into_par_iter()
                .map(|b| {
                    let mut rng = stream(seed, (ni as u64) << 32 | b as u64, Purpose::Direct);
                    let todo = batch.min(replicates - b * batch);
                    let mut hits = 0u64;
                    for _ in 0..todo {
                        let cfg = sampler::init_uniform(n, &mut rng).expect("n >= 2");
                        if cfg.total().norm() / n as f64 >= x_norm {
                            hits += 1;
                        }
                    }
                    (hits, todo as u64)
                })
                .collect();
            let hits: u64 = counts.iter().map(|c| c.0).sum();
            let total: u64 = counts.iter().map(|c| c.1).sum();
            (hits, total as f64, total as f64)
        } else {
            let chains = chain_opts.chains.max(1);
            let per_chain = (replicates as u64).div_ceil(chains as u64) * chain_opts.thin;
            let burnin = ChainParams::default_burnin(n);
            let series: Vec<Vec<f64>> = (0..chains)
                .into_par_iter()
                .map(|c| {
                    let params = ChainParams {
                        n,
                        beta,
                        sweeps: burnin + per_chain,
                        burnin,
                        thin: chain_opts.thin,
                        seed,
                        chain_id: (ni as u64) << 32 | c as u64,
                        adaptive_burnin: false,
                    };
                    let s = sampler::run_chain(&params).expect("valid chain params");
                    s.records
                        .iter()
                        .map(|r| {
                            if r.s2.sqrt() / n as f64 >= x_norm {
                                1.0
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect();
            let mut hits = 0u64;
            let mut total = 0u64;
            let mut ess_total = 0.0;
            for ind in &series {
                hits += ind.iter().sum::<f64>() as u64;
                total += ind.len() as u64;
                ess_total += effective_sample_size(ind).unwrap_or(ind.len() as f64);
            }
            (hits, total as f64, ess_total)
        };

        if exceed == 0 {
            warnings.push(format!("n = {n}: no exceedances observed; size dropped"));
            dropped.push(n);
            continue;
        }
        let p_hat = exceed as f64 / samples;
        let rate_hat = -p_hat.ln() / n as f64;
        // Delta method on ln P̂ with the effective sample count.
        let se = ((1.0 - p_hat) / (ess * p_hat)).sqrt() / n as f64;
        points.push(RatePoint { n, exceedances: exceed, samples, rate_hat, se });
    }

    if points.is_empty() {
        return Err(Error::InsufficientData(
            "no exceedances at any size; move x_norm or enlarge the replicate budget".into(),
        ));
    }

    let extrapolated_rate = if points.len() == 1 {
        warnings.push("single surviving size; extrapolation degenerates to that estimate".into());
        points[0].rate_hat
    } else {
        // Ordinary least squares of rate against 1/n; intercept is the limit.
        let xs: Vec<f64> = points.iter().map(|p| 1.0 / p.n as f64).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.rate_hat).collect();
        let m = xs.len() as f64;
        let xbar = xs.iter().sum::<f64>() / m;
        let ybar = ys.iter().sum::<f64>() / m;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
        ybar - (sxy / sxx) * xbar
    };

    Ok(TailRateFit {
        beta,
        x_norm,
        points,
        dropped,
        extrapolated_rate,
        theory_rate,
        warnings,
    })
}

/// Least-squares slope of `ln y` against `ln x`; used for scaling checks.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData("log_log_slope needs matched inputs (>= 2)".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let xbar = lx.iter().sum::<f64>() / n;
    let ybar = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - xbar).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special;

    fn unit_uniform(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, 0, Purpose::Direct);
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn ks_null_scale() {
        // Samples drawn from the target via inverse CDF: D ~ 1.36/sqrt(N).
        let u = unit_uniform(10_000, 1);
        let samples: Vec<f64> = u.iter().map(|&p| special::normal_quantile(p.max(1e-12))).collect();
        let rep = ks_distance(&samples, special::normal_cdf, "normal", 2).unwrap();
        assert!(rep.value < 1.36 / (10_000f64).sqrt() * 1.5, "{}", rep.value);
        assert!(rep.bootstrap_ci.0 <= rep.value && rep.value <= rep.bootstrap_ci.1);
        assert!(ks_distance(&samples[..50], special::normal_cdf, "normal", 2).is_err());
    }

    #[test]
    fn ks_point_mass_is_far_from_continuous_law() {
        let samples = vec![0.0; 1000];
        let rep = ks_distance(&samples, special::normal_cdf, "normal", 3).unwrap();
        assert!(rep.value >= 0.5);
    }

    #[test]
    fn w1_of_own_quantiles_is_discretization_small() {
        let n = 10_000;
        let samples: Vec<f64> = (0..n)
            .map(|i| special::normal_quantile((i as f64 + 0.5) / n as f64))
            .collect();
        let rep = wasserstein1_empirical(&samples, special::normal_quantile, "normal", 4).unwrap();
        assert!(rep.value < 1.0 / n as f64 * 10.0, "{}", rep.value);
    }

    #[test]
    fn w1_null_scale_for_normal_samples() {
        let u = unit_uniform(10_000, 5);
        let samples: Vec<f64> = u.iter().map(|&p| special::normal_quantile(p.clamp(1e-12, 1.0))).collect();
        let rep = wasserstein1_empirical(&samples, special::normal_quantile, "normal", 6).unwrap();
        assert!(rep.value < 0.03, "{}", rep.value);
    }

    #[test]
    fn ess_iid_near_n() {
        let series = unit_uniform(10_000, 7);
        let ess = effective_sample_size(&series).unwrap();
        assert!(ess > 8_000.0 && ess < 12_000.0, "ess = {ess}");
    }

    #[test]
    fn ess_alternating_at_least_n() {
        let series: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let ess = effective_sample_size(&series).unwrap();
        assert!(ess >= 1000.0);
        let constant = vec![2.5; 500];
        assert_eq!(effective_sample_size(&constant).unwrap(), 500.0);
    }

    #[test]
    fn ess_ar1_matches_analytic_ratio() {
        // AR(1) with coefficient 0.9: ESS/N = (1-0.9)/(1+0.9).
        let mut rng = stream(8, 0, Purpose::Direct);
        let n = 200_000;
        let mut series = Vec::with_capacity(n);
        let mut x = 0.0;
        for _ in 0..n {
            // Box-Muller from two uniforms.
            let u1: f64 = rng.random::<f64>().max(1e-12);
            let u2: f64 = rng.random();
            let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            x = 0.9 * x + z;
            series.push(x);
        }
        let ess = effective_sample_size(&series).unwrap();
        let expect = n as f64 * 0.1 / 1.9;
        assert!((ess / expect - 1.0).abs() < 0.3, "ess = {ess}, expect = {expect}");
    }

    #[test]
    fn tail_fit_refuses_degenerate_input() {
        assert!(tail_rate_fit(0.0, 0.0, &[16, 24], 20_000, 1, ChainTailOptions::default()).is_err());
        assert!(tail_rate_fit(0.0, 0.4, &[16, 24], 100, 1, ChainTailOptions::default()).is_err());
        assert!(tail_rate_fit(0.0, 0.4, &[], 20_000, 1, ChainTailOptions::default()).is_err());
    }

    #[test]
    fn tail_fit_drops_sizes_without_exceedances() {
        // x = 0.8 at n = 400 has probability ~ e^{-nI} with I(0.8) ≈ 0.94:
        // astronomically unlikely, so every size must drop and error out.
        let res = tail_rate_fit(0.0, 0.8, &[400], 10_000, 1, ChainTailOptions::default());
        assert!(res.is_err());
        // Mixed grid: the small size survives, the large one drops.
        let fit = tail_rate_fit(0.0, 0.55, &[12, 600], 10_000, 2, ChainTailOptions::default()).unwrap();
        assert_eq!(fit.dropped, vec![600]);
        assert_eq!(fit.points.len(), 1);
        assert!(!fit.warnings.is_empty());
    }

    #[test]
    fn tail_rates_increase_with_threshold() {
        // Monotonicity of the empirical rate in x at fixed n (beta = 0).
        let mut prev = -1.0;
        for x in [0.3, 0.4, 0.5] {
            let fit = tail_rate_fit(0.0, x, &[24], 40_000, 3, ChainTailOptions::default()).unwrap();
            assert!(fit.points[0].rate_hat > prev);
            prev = fit.points[0].rate_hat;
        }
    }

    #[test]
    fn log_log_slope_recovers_power() {
        let xs = [500.0f64, 1000.0, 2000.0, 4000.0];
        let ys: Vec<f64> = xs.iter().map(|&x: &f64| 2.5 * x.powf(1.5)).collect();
        let slope = log_log_slope(&xs, &ys).unwrap();
        assert!((slope - 1.5).abs() < 1e-12);
    }
}
