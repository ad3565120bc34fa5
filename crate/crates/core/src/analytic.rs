//! Closed-form thermodynamics of the mean-field Heisenberg model.
//!
//! Everything here is a pure function of its arguments. The central object
//! is the Langevin function `L(x) = coth(x) - 1/x`, the mean cosine of a
//! unit vector under an exponential tilt of concentration `x`. From it:
//!
//! - the order parameter `k₂(β)`, the positive root of `x = β L(x)` for
//!   `β > 3`;
//! - the free energy `φ(β)`, zero up to the critical coupling `β_c = 3` and
//!   `Φ_β(k₂)` above it, where `Φ_β` is the constrained free-energy
//!   functional in the tilt variable;
//! - the large-deviation rate of the magnetization under the Gibbs measure,
//!   reported both raw (`Φ_β` at the dual tilt) and centered by `φ(β)`;
//! - the microcanonical entropy `J(u)` on `(-1/2, 0]`;
//! - the longitudinal density of a single spin in the supercritical
//!   macrostate.
//!
//! Root solving follows a fixed recipe: bisection on a guaranteed bracket
//! down to width 1e-6, then Newton polish to residuals near machine
//! precision. Small arguments route through truncated series to avoid the
//! `coth(x) - 1/x` cancellation; the switch point is `x = 0.05`, where the
//! dropped series terms are below 1e-13.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Critical inverse temperature of the mean-field model on the 2-sphere.
pub const BETA_CRITICAL: f64 = 3.0;

/// Series/closed-form switch point for `langevin` and `langevin_deriv`.
const SERIES_CUTOFF: f64 = 0.05;

/// Phase of the model at a given inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl Regime {
    pub fn of(beta: f64) -> Regime {
        if beta < BETA_CRITICAL {
            Regime::Subcritical
        } else if beta == BETA_CRITICAL {
            Regime::Critical
        } else {
            Regime::Supercritical
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        }
    }
}

/// Langevin function `coth(x) - 1/x`, the tilted mean cosine.
///
/// Strictly increasing on `[0, ∞)` with `L(x) < min(x/3, 1)`; `L(0) = 0`
/// as a limit.
pub fn langevin(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("langevin requires x >= 0, got {x}")));
    }
    Ok(langevin_unchecked(x))
}

#[inline]
pub(crate) fn langevin_unchecked(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        let x2 = x * x;
        x * (1.0 / 3.0 + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 - x2 / 4725.0)))
    } else if x > 350.0 {
        1.0 - 1.0 / x
    } else {
        1.0 / x.tanh() - 1.0 / x
    }
}

/// Derivative of the Langevin function, `1/x² - 1/sinh²(x)`.
///
/// Strictly decreasing from `1/3` at the origin to `0` at infinity.
pub fn langevin_deriv(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("langevin_deriv requires x >= 0, got {x}")));
    }
    Ok(langevin_deriv_unchecked(x))
}

#[inline]
pub(crate) fn langevin_deriv_unchecked(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        let x2 = x * x;
        1.0 / 3.0 + x2 * (-1.0 / 15.0 + x2 * (2.0 / 189.0 - x2 / 675.0))
    } else if x > 350.0 {
        1.0 / (x * x)
    } else {
        let s = x.sinh();
        1.0 / (x * x) - 1.0 / (s * s)
    }
}

/// Inverse of the Langevin function on `[0, 1)`.
///
/// Bisection on the bracket `[3m, 1/(1-m)]` (valid since `L(x) ≤ x/3` and
/// `L(x) > 1 - 1/x`), then Newton polish.
pub fn langevin_inverse(m: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::domain(format!(
            "langevin_inverse requires 0 <= m < 1, got {m}"
        )));
    }
    if m == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 3.0 * m;
    let mut hi = 1.0 / (1.0 - m);
    if hi <= lo {
        hi = lo + 1.0;
    }
    // L(lo) <= m <= L(hi) by construction; tighten to width 1e-6.
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if langevin_unchecked(mid) < m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut c = 0.5 * (lo + hi);
    for _ in 0..8 {
        let f = langevin_unchecked(c) - m;
        let fp = langevin_deriv_unchecked(c);
        let step = f / fp;
        c -= step;
        if c <= 0.0 {
            c = 0.5 * (lo + hi);
        }
        if step.abs() < 1e-15 * c.max(1.0) {
            break;
        }
    }
    Ok(c)
}

/// Order parameter `k₂(β)`: the unique positive root of `x = β L(x)`,
/// defined for `β > 3`. Strictly increasing in `β`.
pub fn order_parameter(beta: f64) -> Result<f64> {
    if !(beta > BETA_CRITICAL) {
        return Err(Error::domain(format!(
            "order parameter is defined for beta > 3, got {beta}"
        )));
    }
    // f(x) = x - beta L(x) is negative just right of 0 and positive at beta.
    let mut lo = 1e-8;
    let mut hi = beta;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if mid - beta * langevin_unchecked(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut k = 0.5 * (lo + hi);
    for _ in 0..8 {
        let f = k - beta * langevin_unchecked(k);
        let fp = 1.0 - beta * langevin_deriv_unchecked(k);
        let step = f / fp;
        k -= step;
        if step.abs() < 1e-15 * k.max(1.0) {
            break;
        }
    }
    Ok(k)
}

/// Stable `ln(k / sinh k)` for `k > 0` (and 0 at `k = 0`).
fn ln_k_over_sinh(k: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else if k < 0.05 {
        let k2 = k * k;
        // -ln(sinh k / k) = -(k²/6 - k⁴/180 + k⁶/2835 - ...)
        -(k2 / 6.0 - k2 * k2 / 180.0 + k2 * k2 * k2 / 2835.0)
    } else if k > 300.0 {
        // sinh k = e^k (1 - e^{-2k}) / 2
        k.ln() - k + std::f64::consts::LN_2 - (-(2.0 * k)).exp_m1().ln_1p()
    } else {
        (k / k.sinh()).ln()
    }
}

/// Constrained free-energy functional
/// `Φ_β(k) = ln(k/sinh k) + k coth k - 1 - (β/2) L(k)²`,
/// continuous at `k = 0` with value 0.
pub fn free_energy_functional(beta: f64, k: f64) -> Result<f64> {
    if !(k >= 0.0) {
        return Err(Error::domain(format!(
            "free_energy_functional requires k >= 0, got {k}"
        )));
    }
    if k < SERIES_CUTOFF {
        // Series: k²(3-β)/18 + k⁴(β/135 - 1/60) + O(k⁶)
        let k2 = k * k;
        return Ok(k2 * (3.0 - beta) / 18.0 + k2 * k2 * (beta / 135.0 - 1.0 / 60.0));
    }
    let l = langevin_unchecked(k);
    // k coth k - 1 = k L(k) + k/k - 1 = k L(k)  ... since coth k = L(k) + 1/k.
    Ok(ln_k_over_sinh(k) + k * l - 0.5 * beta * l * l)
}

/// Free energy `φ(β)`: 0 for `β ≤ 3`, `Φ_β(k₂(β))` above.
///
/// Both branches meet continuously (and with continuous derivative) at
/// `β = 3`.
pub fn free_energy(beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::domain(format!("free_energy requires beta >= 0, got {beta}")));
    }
    if beta <= BETA_CRITICAL {
        Ok(0.0)
    } else {
        free_energy_functional(beta, order_parameter(beta)?)
    }
}

/// Rate-function evaluation for the rescaled magnetization.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateValue {
    /// The dual tilt `c` solving `L(c) = |x|`.
    pub tilt: f64,
    /// `Φ_β(c)`: the rate as displayed, without recentering.
    pub raw: f64,
    /// `Φ_β(c) - φ(β)`: nonnegative, vanishing exactly on the minimizing set.
    pub centered: f64,
}

/// Large-deviation rate of the magnetization norm under the Gibbs measure.
///
/// `β = 0` reduces to the Cramér rate for sums of i.i.d. uniform spins.
pub fn spin_rate(beta: f64, x_norm: f64) -> Result<RateValue> {
    if !(beta >= 0.0) {
        return Err(Error::domain(format!("spin_rate requires beta >= 0, got {beta}")));
    }
    if !(0.0..1.0).contains(&x_norm) {
        return Err(Error::domain(format!(
            "spin_rate requires 0 <= x_norm < 1, got {x_norm}"
        )));
    }
    let c = langevin_inverse(x_norm)?;
    let raw = free_energy_functional(beta, c)?;
    let centered = raw - free_energy(beta)?;
    Ok(RateValue { tilt: c, raw, centered })
}

/// Variance of the supercritical limit of the recentered, renormalized
/// squared total spin: `4β² L'(k₂) / ((1 - β L'(k₂)) k₂²)`.
pub fn supercritical_variance(beta: f64) -> Result<f64> {
    let k2 = order_parameter(beta)?;
    let gp = langevin_deriv_unchecked(k2);
    let denom = 1.0 - beta * gp;
    Ok(4.0 * beta * beta * gp / (denom * k2 * k2))
}

/// Pair-drift rate coefficient before the `1/n` factor: `1 - β/3` below the
/// transition, `1 - β L'(k₂)` above, `0` at criticality.
pub fn drift_rate_coefficient(beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::domain(format!("beta must be >= 0, got {beta}")));
    }
    if beta <= BETA_CRITICAL {
        Ok(1.0 - beta / 3.0)
    } else {
        let k2 = order_parameter(beta)?;
        Ok(1.0 - beta * langevin_deriv_unchecked(k2))
    }
}

/// One point of the microcanonical entropy curve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MicrocanonicalPoint {
    /// Energy per particle, in `(-1/2, 0]`.
    pub u: f64,
    /// Tilt root solving `L(k) = sqrt(-2u)`.
    pub root: f64,
    /// Entropy value `J(u) = ln(root/sinh root) + root·sqrt(-2u)`.
    pub entropy: f64,
}

/// Microcanonical entropy `J(u)` on `(-1/2, 0]`, with `J(0) = 0`.
pub fn microcanonical_entropy(u: f64) -> Result<MicrocanonicalPoint> {
    if !(u > -0.5 && u <= 0.0) {
        return Err(Error::domain(format!(
            "microcanonical entropy is defined on (-1/2, 0], got {u}"
        )));
    }
    if u == 0.0 {
        return Ok(MicrocanonicalPoint { u, root: 0.0, entropy: 0.0 });
    }
    let m = (-2.0 * u).sqrt();
    let k = langevin_inverse(m)?;
    Ok(MicrocanonicalPoint {
        u,
        root: k,
        entropy: ln_k_over_sinh(k) + k * m,
    })
}

/// Density on `[-1, 1]` of the cosine of a single spin's polar angle
/// relative to the macrostate pole, for `β > 3`:
/// `f*(z) = k₂ e^{k₂ z} / (2 sinh k₂)`.
pub fn macrostate_longitudinal_density(beta: f64, z: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&z) {
        return Err(Error::domain(format!("z must lie in [-1, 1], got {z}")));
    }
    let k2 = order_parameter(beta)?;
    // k e^{kz} / (2 sinh k) = k e^{k(z-1)} / (1 - e^{-2k})
    Ok(k2 * (k2 * (z - 1.0)).exp() / (-(-2.0 * k2).exp_m1()))
}

/// Complete per-`β` analytic record.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AnalyticProfile {
    pub beta: f64,
    pub regime: Regime,
    /// Order-parameter root; 0 by convention for `β ≤ 3`.
    pub k2: f64,
    /// Free energy `φ(β)`.
    pub free_energy: f64,
    /// Supercritical limit variance; only defined above the transition.
    pub sigma2: Option<f64>,
    /// Pair-drift rate coefficient before the `1/n` factor.
    pub lambda: f64,
}

impl AnalyticProfile {
    pub fn for_beta(beta: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(Error::domain(format!("beta must be >= 0, got {beta}")));
        }
        let regime = Regime::of(beta);
        let (k2, sigma2) = match regime {
            Regime::Supercritical => (order_parameter(beta)?, Some(supercritical_variance(beta)?)),
            _ => (0.0, None),
        };
        Ok(AnalyticProfile {
            beta,
            regime,
            k2,
            free_energy: free_energy(beta)?,
            sigma2,
            lambda: drift_rate_coefficient(beta)?,
        })
    }
}

/// Outcome of one inequality scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub passed: bool,
    /// Worst margin observed (positive = satisfied with room).
    pub min_margin: f64,
    /// Grid point attaining the worst margin.
    pub argmin: f64,
}

/// Report of the four analytic inequalities underpinning the phase
/// transition, scanned on explicit grids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityReport {
    pub checks: Vec<InequalityCheck>,
    pub all_passed: bool,
}

/// Scans, on the given grids:
///
/// 1. `L(x) < x/3`;
/// 2. `x / L(x)` strictly increasing;
/// 3. `β L'(k₂(β)) < 1`;
/// 4. `Φ_β''(k₂) > 0` by central second differences.
pub fn verify_inequalities(x_grid: &[f64], beta_grid: &[f64]) -> Result<InequalityReport> {
    let mut checks = Vec::with_capacity(4);

    let mut margin = f64::INFINITY;
    let mut arg = f64::NAN;
    for &x in x_grid {
        let m = x / 3.0 - langevin(x)?;
        if m < margin {
            margin = m;
            arg = x;
        }
    }
    checks.push(InequalityCheck {
        name: "langevin_below_linear".into(),
        passed: margin > 0.0,
        min_margin: margin,
        argmin: arg,
    });

    let mut margin = f64::INFINITY;
    let mut arg = f64::NAN;
    let mut prev: Option<(f64, f64)> = None;
    for &x in x_grid {
        let ratio = x / langevin(x)?;
        if let Some((px, pr)) = prev {
            let m = ratio - pr;
            if m < margin {
                margin = m;
                arg = px;
            }
        }
        prev = Some((x, ratio));
    }
    checks.push(InequalityCheck {
        name: "dual_ratio_increasing".into(),
        passed: margin > 0.0,
        min_margin: margin,
        argmin: arg,
    });

    let mut margin = f64::INFINITY;
    let mut arg = f64::NAN;
    for &beta in beta_grid {
        let k2 = order_parameter(beta)?;
        let m = 1.0 - beta * langevin_deriv(k2)?;
        if m < margin {
            margin = m;
            arg = beta;
        }
    }
    checks.push(InequalityCheck {
        name: "drift_rate_positive".into(),
        passed: margin > 0.0,
        min_margin: margin,
        argmin: arg,
    });

    let mut margin = f64::INFINITY;
    let mut arg = f64::NAN;
    for &beta in beta_grid {
        let k2 = order_parameter(beta)?;
        let h = 1e-4 * k2.max(1.0);
        let second = (free_energy_functional(beta, k2 + h)? - 2.0 * free_energy_functional(beta, k2)?
            + free_energy_functional(beta, k2 - h)?)
            / (h * h);
        if second < margin {
            margin = second;
            arg = beta;
        }
    }
    checks.push(InequalityCheck {
        name: "functional_convex_at_root".into(),
        passed: margin > 0.0,
        min_margin: margin,
        argmin: arg,
    });

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(InequalityReport { checks, all_passed })
}

/// Log-spaced grid helper, inclusive of both endpoints.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    let (ll, lh) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (ll + (lh - ll) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Linear grid helper, inclusive of both endpoints.
pub fn lin_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    /// Independent bisection root finder used as an oracle against the
    /// production Newton-polished solvers.
    fn bisect_oracle<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn langevin_at_origin_and_one() {
        assert_eq!(langevin(0.0).unwrap(), 0.0);
        // coth(1) - 1 to 16 digits.
        assert!((langevin(1.0).unwrap() - 0.3130352854993313).abs() < 1e-15);
    }

    #[test]
    fn langevin_below_linear_bound() {
        for x in [0.1, 1.0, 5.0, 20.0] {
            let l = langevin(x).unwrap();
            assert!(l < x / 3.0);
            assert!(l < 1.0);
        }
    }

    #[test]
    fn langevin_rejects_negative() {
        assert!(langevin(-0.1).is_err());
        assert!(langevin_deriv(-1e-9).is_err());
    }

    #[test]
    fn langevin_series_matches_direct_near_cutoff() {
        // Evaluate both branches across the switch point.
        for &x in &[0.02f64, 0.04, 0.049, 0.051, 0.06, 0.08] {
            let series = {
                let x2 = x * x;
                x * (1.0 / 3.0 + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 - x2 / 4725.0)))
            };
            let direct = 1.0 / x.tanh() - 1.0 / x;
            assert!((series - direct).abs() < 1e-12, "x = {x}");
            let dseries = {
                let x2 = x * x;
                1.0 / 3.0 + x2 * (-1.0 / 15.0 + x2 * (2.0 / 189.0 - x2 / 675.0))
            };
            let s = x.sinh();
            let ddirect = 1.0 / (x * x) - 1.0 / (s * s);
            assert!((dseries - ddirect).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn langevin_deriv_limit_and_monotone() {
        assert!((langevin_deriv(0.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let grid = log_grid(1e-4, 50.0, 200);
        let mut prev = f64::INFINITY;
        for x in grid {
            let d = langevin_deriv(x).unwrap();
            assert!(d < prev, "not strictly decreasing at {x}");
            assert!(d > 0.0 && d <= 1.0 / 3.0 + 1e-15);
            prev = d;
        }
    }

    #[test]
    fn langevin_deriv_matches_finite_differences() {
        for x in [0.5, 2.0, 10.0] {
            let fd = central_diff(|t| langevin(t).unwrap(), x, 1e-5);
            assert!((langevin_deriv(x).unwrap() - fd).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn langevin_inverse_round_trip() {
        assert_eq!(langevin_inverse(0.0).unwrap(), 0.0);
        for x in [0.01, 1.0, 10.0] {
            let m = langevin(x).unwrap();
            let back = langevin_inverse(m).unwrap();
            assert!((back - x).abs() < 1e-10 * x.max(1.0), "x = {x}, got {back}");
        }
        // m -> 1 sends the tilt to infinity roughly like 1/(1-m).
        assert!(langevin_inverse(0.999).unwrap() > 100.0);
        assert!(langevin_inverse(1.0).is_err());
        assert!(langevin_inverse(-0.1).is_err());
    }

    #[test]
    fn langevin_inverse_residuals_small() {
        for m in lin_grid(0.001, 0.995, 120) {
            let c = langevin_inverse(m).unwrap();
            assert!((langevin(c).unwrap() - m).abs() < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn order_parameter_against_bisection_oracle() {
        let k = order_parameter(5.0).unwrap();
        let oracle = bisect_oracle(|x| x - 5.0 * (1.0 / x.tanh() - 1.0 / x), 1e-6, 10.0, 1e-12);
        assert!((k - oracle).abs() < 1e-9);
        // High-precision reference value for beta = 5.
        assert!((k - 3.629409935955998).abs() < 1e-12);
    }

    #[test]
    fn order_parameter_limits() {
        // Vanishes at the transition.
        assert!(order_parameter(3.0001).unwrap() < 0.05);
        assert!(order_parameter(3.0).is_err());
        assert!(order_parameter(2.0).is_err());
        // Large-beta asymptote k2 ≈ beta - 1 - 1/beta.
        let k = order_parameter(50.0).unwrap();
        assert!((k - 49.0).abs() < 2.0 / 50.0);
        assert!((k - (49.0 - 0.02)).abs() < 5e-3);
    }

    #[test]
    fn order_parameter_monotone_and_tight() {
        let mut prev = 0.0;
        for beta in lin_grid(3.01, 20.0, 100) {
            let k = order_parameter(beta).unwrap();
            assert!(k > prev);
            let resid = (k - beta * langevin(k).unwrap()).abs();
            assert!(resid <= 1e-12 * k.max(1.0), "beta = {beta}, resid = {resid:e}");
            prev = k;
        }
    }

    #[test]
    fn functional_zero_at_origin_and_increasing_subcritical() {
        for beta in [0.0, 2.0, 3.0, 7.0] {
            assert_eq!(free_energy_functional(beta, 0.0).unwrap(), 0.0);
        }
        let mut prev = 0.0;
        for k in lin_grid(0.01, 10.0, 500) {
            let v = free_energy_functional(2.0, k).unwrap();
            assert!(v > prev, "not increasing at k = {k}");
            prev = v;
        }
    }

    #[test]
    fn functional_stationary_at_order_parameter() {
        let k2 = order_parameter(5.0).unwrap();
        let d = central_diff(|k| free_energy_functional(5.0, k).unwrap(), k2, 1e-5);
        assert!(d.abs() < 1e-8, "dPhi/dk at k2 = {d:e}");
    }

    #[test]
    fn free_energy_branches() {
        assert_eq!(free_energy(2.0).unwrap(), 0.0);
        assert_eq!(free_energy(3.0).unwrap(), 0.0);
        let phi5 = free_energy(5.0).unwrap();
        assert!(phi5 < 0.0);
        // Alternative closed form k2²/(2β) + ln(k2/sinh k2).
        let k2 = order_parameter(5.0).unwrap();
        let alt = k2 * k2 / 10.0 + (k2 / k2.sinh()).ln();
        assert!((phi5 - alt).abs() < 1e-13);
    }

    #[test]
    fn free_energy_matches_dense_grid_minimization() {
        // Oracle: brute-force minimum of the functional on a dense grid.
        let mut best = f64::INFINITY;
        let n = 1_000_000usize;
        for i in 1..=n {
            let k = 10.0 * i as f64 / n as f64;
            let v = free_energy_functional(5.0, k).unwrap();
            if v < best {
                best = v;
            }
        }
        assert!((free_energy(5.0).unwrap() - best).abs() < 1e-8);
    }

    #[test]
    fn free_energy_second_order_transition() {
        // phi and its one-sided difference quotient both vanish as beta -> 3+.
        let mut prev_phi = f64::INFINITY;
        let mut prev_slope = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3] {
            let phi = free_energy(3.0 + eps).unwrap().abs();
            let slope = (free_energy(3.0 + eps).unwrap() - free_energy(3.0).unwrap()).abs() / eps;
            assert!(phi < prev_phi / 5.0, "phi at eps = {eps} fell too slowly");
            assert!(slope < prev_slope / 5.0, "slope at eps = {eps} fell too slowly");
            prev_phi = phi;
            prev_slope = slope;
        }
    }

    #[test]
    fn spin_rate_values() {
        let r = spin_rate(0.0, 0.0).unwrap();
        assert_eq!(r.raw, 0.0);
        assert_eq!(r.centered, 0.0);
        // Rate at the image of tilt c = 1: coth(1) - 1 + ln(1/sinh 1).
        let m = langevin(1.0).unwrap();
        let r = spin_rate(0.0, m).unwrap();
        assert!((r.raw - 0.15159592392813567).abs() < 1e-12);
        assert!((r.tilt - 1.0).abs() < 1e-10);
        assert!(spin_rate(1.0, 1.0).is_err());
        assert!(spin_rate(1.0, -0.5).is_err());
    }

    #[test]
    fn centered_rate_vanishes_at_minimizer() {
        // Supercritical: minimum at x = k2/beta.
        let k2 = order_parameter(5.0).unwrap();
        let r = spin_rate(5.0, k2 / 5.0).unwrap();
        assert!(r.centered.abs() < 1e-10);
        // Subcritical: minimum at the origin.
        let r0 = spin_rate(2.0, 0.0).unwrap();
        assert!(r0.centered.abs() < 1e-14);
    }

    #[test]
    fn centered_rate_nonnegative_on_grids() {
        for beta in [0.0, 1.5, 3.0, 4.0, 8.0] {
            for x in lin_grid(0.0, 0.95, 96) {
                let r = spin_rate(beta, x).unwrap();
                assert!(r.centered >= -1e-12, "beta = {beta}, x = {x}: {}", r.centered);
            }
        }
    }

    #[test]
    fn supercritical_variance_positive_and_diverging_at_threshold() {
        for beta in [3.2, 4.0, 6.0, 10.0] {
            assert!(supercritical_variance(beta).unwrap() > 0.0);
        }
        let a = supercritical_variance(3.01).unwrap();
        let b = supercritical_variance(3.1).unwrap();
        let c = supercritical_variance(4.0).unwrap();
        assert!(a > b && b > c);
        // Reference value at beta = 5.
        assert!((supercritical_variance(5.0).unwrap() - 0.8745206621786702).abs() < 1e-12);
    }

    #[test]
    fn supercritical_variance_against_grid_root() {
        // Rebuild sigma^2 from a brute-force root instead of the Newton one.
        let k2 = bisect_oracle(|x| x - 5.0 * (1.0 / x.tanh() - 1.0 / x), 1e-6, 10.0, 1e-12);
        let gp = 1.0 / (k2 * k2) - 1.0 / (k2.sinh() * k2.sinh());
        let oracle = 4.0 * 25.0 * gp / ((1.0 - 5.0 * gp) * k2 * k2);
        assert!((supercritical_variance(5.0).unwrap() - oracle).abs() < 1e-8);
    }

    #[test]
    fn microcanonical_entropy_basics() {
        let p = microcanonical_entropy(0.0).unwrap();
        assert_eq!(p.entropy, 0.0);
        assert!(microcanonical_entropy(-0.5).is_err());
        assert!(microcanonical_entropy(0.1).is_err());
        // Root scale: k ≈ 3 sqrt(-2u) near zero energy.
        let p = microcanonical_entropy(-0.005).unwrap();
        assert!((p.root / 0.3 - 1.0).abs() < 0.02);
        // J > 0 away from zero.
        assert!(p.entropy > 0.0);
    }

    #[test]
    fn microcanonical_entropy_quadratic_expansion() {
        // J(u) = -3u + (9/5)u² + O(|u|³); the cubic coefficient is ≈ -2.26,
        // so a constant of 3 covers the remainder on [-0.05, 0).
        for u in lin_grid(-0.05, -0.001, 50) {
            let j = microcanonical_entropy(u).unwrap().entropy;
            let remainder = (j + 3.0 * u - 1.8 * u * u).abs();
            assert!(remainder <= 3.0 * u.abs().powi(3), "u = {u}, remainder = {remainder:e}");
        }
    }

    #[test]
    fn macrostate_density_normalized_with_correct_mean() {
        for beta in [3.5, 5.0, 10.0] {
            let k2 = order_parameter(beta).unwrap();
            let total = quad::integrate(
                |z| macrostate_longitudinal_density(beta, z).unwrap(),
                -1.0,
                1.0,
                1e-12,
            )
            .unwrap();
            assert!((total - 1.0).abs() < 1e-10, "beta = {beta}");
            let mean = quad::integrate(
                |z| z * macrostate_longitudinal_density(beta, z).unwrap(),
                -1.0,
                1.0,
                1e-12,
            )
            .unwrap();
            assert!((mean - k2 / beta).abs() < 1e-10, "beta = {beta}");
            assert!((mean - langevin(k2).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn macrostate_density_concentrates_at_low_temperature() {
        let mass = quad::integrate(
            |z| macrostate_longitudinal_density(100.0, z).unwrap(),
            0.9,
            1.0,
            1e-12,
        )
        .unwrap();
        assert!(mass > 0.99);
        assert!(macrostate_longitudinal_density(5.0, 1.5).is_err());
    }

    #[test]
    fn inequality_report_passes_on_spec_grids() {
        let x_grid = log_grid(1e-3, 50.0, 1000);
        let beta_grid = lin_grid(3.01, 20.0, 100);
        let report = verify_inequalities(&x_grid, &beta_grid).unwrap();
        assert!(report.all_passed, "{report:?}");
        assert_eq!(report.checks.len(), 4);
    }

    #[test]
    fn functional_derivative_vanishes_at_root_for_beta_4() {
        let k2 = order_parameter(4.0).unwrap();
        let d = central_diff(|k| free_energy_functional(4.0, k).unwrap(), k2, 1e-5);
        assert!(d.abs() < 1e-7);
    }

    #[test]
    fn dual_ratio_tends_to_three() {
        // x / L(x) -> 3 as x -> 0: the critical coupling.
        let r = 1e-3 / langevin(1e-3).unwrap();
        assert!((r - 3.0).abs() < 1e-5);
    }

    #[test]
    fn profile_invariants() {
        let sub = AnalyticProfile::for_beta(2.0).unwrap();
        assert_eq!(sub.regime, Regime::Subcritical);
        assert_eq!(sub.k2, 0.0);
        assert_eq!(sub.free_energy, 0.0);
        assert!(sub.sigma2.is_none());
        assert!((sub.lambda - (1.0 - 2.0 / 3.0)).abs() < 1e-15);

        let sup = AnalyticProfile::for_beta(5.0).unwrap();
        assert_eq!(sup.regime, Regime::Supercritical);
        assert!((sup.k2 - 5.0 * langevin(sup.k2).unwrap()).abs() <= 1e-12 * sup.k2.max(1.0));
        assert!(sup.free_energy < 0.0);
        let s2 = sup.sigma2.unwrap();
        assert!(s2 > 0.0);
        assert!(sup.lambda > 0.0 && sup.lambda < 1.0);

        let crit = AnalyticProfile::for_beta(3.0).unwrap();
        assert_eq!(crit.regime, Regime::Critical);
        assert_eq!(crit.k2, 0.0);
        assert_eq!(crit.lambda, 0.0);
    }
}
