//! Gibbs sampler on configurations of unit spins.
//!
//! A configuration is `n` points on the 2-sphere with a cached vector total
//! `S = Σ σ_i`. One sweep performs `n` random-scan single-site updates: site
//! `i` is replaced by a draw from its exact conditional law given the rest,
//! which is a von Mises-Fisher density with direction `S - σ_i` and
//! concentration `β|S - σ_i|/n`. The cosine of the polar angle is drawn by
//! the closed-form inverse CDF, so single-site updates are rejection-free.
//!
//! Chains are deterministic given `(seed, chain_id)`: all randomness comes
//! from dedicated ChaCha streams derived in [`crate::rng`].

use crate::rng::{stream, Purpose};
use crate::vec3::Vec3;
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// How often the cached total is recomputed from scratch to stop
/// floating-point drift from accumulating.
const TOTAL_REFRESH_SWEEPS: u64 = 1024;

/// Concentrations below this use the exact uniform law (the inverse-CDF
/// formula divides by the concentration).
const UNIFORM_FALLBACK_C: f64 = 1e-8;

/// Simulation state: `n` unit spins plus the cached total.
#[derive(Debug, Clone)]
pub struct Configuration {
    spins: Vec<Vec3>,
    total: Vec3,
}

impl Configuration {
    /// Builds a configuration from explicit spins, validating unit norms.
    pub fn from_spins(spins: Vec<Vec3>) -> Result<Self> {
        if spins.len() < 2 {
            return Err(Error::domain("a configuration needs at least 2 spins"));
        }
        for (i, s) in spins.iter().enumerate() {
            if (s.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::domain(format!("spin {i} is not unit length")));
            }
        }
        let total = spins.iter().fold(Vec3::ZERO, |acc, &s| acc + s);
        Ok(Configuration { spins, total })
    }

    pub fn n(&self) -> usize {
        self.spins.len()
    }

    pub fn spins(&self) -> &[Vec3] {
        &self.spins
    }

    /// Cached total spin `S = Σ σ_i`.
    pub fn total(&self) -> Vec3 {
        self.total
    }

    /// `|S|²`.
    pub fn total_norm_sq(&self) -> f64 {
        self.total.norm_sq()
    }

    /// Energy per particle `h = -|S|² / (2n²)`, in `[-1/2, 0]`.
    pub fn energy_per_particle(&self) -> f64 {
        let n = self.spins.len() as f64;
        -self.total.norm_sq() / (2.0 * n * n)
    }

    /// Total energy `H = n · h`.
    pub fn energy(&self) -> f64 {
        self.spins.len() as f64 * self.energy_per_particle()
    }

    /// Recomputes the cached total exactly.
    pub fn refresh_total(&mut self) {
        self.total = self.spins.iter().fold(Vec3::ZERO, |acc, &s| acc + s);
    }

    /// Maximum componentwise gap between the cached total and a fresh sum.
    pub fn total_drift(&self) -> f64 {
        let fresh = self.spins.iter().fold(Vec3::ZERO, |acc, &s| acc + s);
        let d = fresh - self.total;
        d.x.abs().max(d.y.abs()).max(d.z.abs())
    }
}

/// Uniform point on the unit sphere: cosine of the polar angle uniform on
/// `[-1, 1]`, azimuth uniform.
pub fn uniform_spin<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let (cos_phi, sin_phi) = random_azimuth(rng);
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * cos_phi, r * sin_phi, z)
}

/// Uniform (cos φ, sin φ) by Marsaglia polar rejection; no trig calls.
#[inline]
fn random_azimuth<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    loop {
        let a = 2.0 * rng.random::<f64>() - 1.0;
        let b = 2.0 * rng.random::<f64>() - 1.0;
        let s = a * a + b * b;
        if s < 1.0 && s > 1e-300 {
            return ((a * a - b * b) / s, 2.0 * a * b / s);
        }
    }
}

/// i.i.d. uniform configuration of `n` spins.
pub fn init_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Configuration> {
    if n < 2 {
        return Err(Error::domain(format!("need n >= 2 spins, got {n}")));
    }
    let spins: Vec<Vec3> = (0..n).map(|_| uniform_spin(rng)).collect();
    let total = spins.iter().fold(Vec3::ZERO, |acc, &s| acc + s);
    Ok(Configuration { spins, total })
}

/// Draws from the density `∝ exp(c ⟨θ, direction⟩)` on the sphere.
///
/// The cosine `w` of the angle to `direction` has CDF
/// `(e^{cw} - e^{-c}) / (e^c - e^{-c})`, inverted in closed form as
/// `w = 1 + log1p((1-u)(e^{-2c} - 1))/c`; the azimuth is uniform.
/// Concentrations below 1e-8 fall back to the exact uniform law.
pub fn sample_vmf<R: Rng + ?Sized>(direction: Vec3, c: f64, rng: &mut R) -> Result<Vec3> {
    if (direction.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::domain("vMF direction must be a unit vector"));
    }
    if !(c >= 0.0) {
        return Err(Error::domain(format!("vMF concentration must be >= 0, got {c}")));
    }
    Ok(sample_vmf_unchecked(direction, c, rng))
}

#[inline]
fn sample_vmf_unchecked<R: Rng + ?Sized>(direction: Vec3, c: f64, rng: &mut R) -> Vec3 {
    if c < UNIFORM_FALLBACK_C {
        return uniform_spin(rng);
    }
    let v = 1.0 - rng.random::<f64>(); // (0, 1]
    let w = (1.0 + (v * (-2.0 * c).exp_m1()).ln_1p() / c).max(-1.0);
    let (cos_phi, sin_phi) = random_azimuth(rng);
    let r = (1.0 - w * w).max(0.0).sqrt();
    let (t1, t2) = direction.orthonormal_frame();
    // Renormalize: keeps unit norms exact to f64 across billions of updates.
    (t1 * (r * cos_phi) + t2 * (r * sin_phi) + direction * w).normalized()
}

/// One full sweep: `n` random-scan single-site conditional updates, with
/// incremental maintenance of the cached total.
pub fn gibbs_sweep<R: Rng + ?Sized>(cfg: &mut Configuration, beta: f64, rng: &mut R) {
    let n = cfg.spins.len();
    let n_f = n as f64;
    for _ in 0..n {
        let i = rng.random_range(0..n);
        let rest = cfg.total - cfg.spins[i];
        let norm = rest.norm();
        let new_spin = if norm < 1e-12 {
            uniform_spin(rng)
        } else {
            sample_vmf_unchecked(rest * (1.0 / norm), beta * norm / n_f, rng)
        };
        cfg.total = rest + new_spin;
        cfg.spins[i] = new_spin;
    }
}

/// Parameters of one chain.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChainParams {
    pub n: usize,
    pub beta: f64,
    /// Total sweep budget, burn-in included.
    pub sweeps: u64,
    /// Sweeps discarded before recording starts.
    pub burnin: u64,
    /// Record every `thin`-th sweep.
    pub thin: u64,
    pub seed: u64,
    pub chain_id: u64,
    /// When set, burn-in extends past `burnin` until the windowed running
    /// mean of `|S|²/n` settles within 1%, capped at four times `burnin`.
    pub adaptive_burnin: bool,
}

impl ChainParams {
    pub fn new(n: usize, beta: f64, sweeps: u64, burnin: u64, thin: u64, seed: u64, chain_id: u64) -> Result<Self> {
        let p = ChainParams { n, beta, sweeps, burnin, thin, seed, chain_id, adaptive_burnin: false };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::domain("n must be at least 2"));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::domain("beta must be >= 0"));
        }
        if self.sweeps <= self.burnin {
            return Err(Error::domain("sweeps must exceed burnin"));
        }
        if self.thin == 0 {
            return Err(Error::domain("thin must be >= 1"));
        }
        Ok(())
    }

    /// Default burn-in policy: ten sweeps per site.
    pub fn default_burnin(n: usize) -> u64 {
        10 * n as u64
    }
}

/// One recorded observation of a chain.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleRecord {
    /// Sweep index on the full timeline (burn-in included).
    pub sweep: u64,
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    /// `|S|²` as computed from the components.
    pub s2: f64,
    /// Energy per particle `-s2 / (2n²)`.
    pub h: f64,
}

/// Time series of observables from one chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSeries {
    pub params: ChainParams,
    /// Burn-in actually discarded (≥ `params.burnin` when adaptive).
    pub burnin_used: u64,
    pub records: Vec<SampleRecord>,
}

impl SampleSeries {
    pub fn s2_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.s2).collect()
    }

    pub fn totals(&self) -> Vec<Vec3> {
        self.records.iter().map(|r| Vec3::new(r.sx, r.sy, r.sz)).collect()
    }

    /// Writes the series as CSV with header `sweep,Sx,Sy,Sz,S2,h`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "sweep,Sx,Sy,Sz,S2,h")?;
        for r in &self.records {
            writeln!(w, "{},{},{},{},{},{}", r.sweep, r.sx, r.sy, r.sz, r.s2, r.h)?;
        }
        Ok(())
    }
}

fn record(cfg: &Configuration, sweep: u64) -> SampleRecord {
    let t = cfg.total();
    let s2 = t.norm_sq();
    let n = cfg.n() as f64;
    SampleRecord { sweep, sx: t.x, sy: t.y, sz: t.z, s2, h: -s2 / (2.0 * n * n) }
}

/// Runs a chain and returns its observable series.
///
/// Identical `params` produce a bit-identical series.
pub fn run_chain(params: &ChainParams) -> Result<SampleSeries> {
    run_chain_observe(params, |_, _| {})
}

/// Like [`run_chain`], additionally invoking `observer` at every recorded
/// sweep with the full configuration. Used for snapshot collection.
pub fn run_chain_observe<F>(params: &ChainParams, mut observer: F) -> Result<SampleSeries>
where
    F: FnMut(u64, &Configuration),
{
    params.validate()?;
    let mut init_rng = stream(params.seed, params.chain_id, Purpose::Init);
    let mut cfg = init_uniform(params.n, &mut init_rng)?;
    let mut rng = stream(params.seed, params.chain_id, Purpose::Dynamics);

    let mut sweep: u64 = 0;
    let mut run_sweep = |cfg: &mut Configuration, rng: &mut _, sweep: &mut u64| {
        gibbs_sweep(cfg, params.beta, rng);
        *sweep += 1;
        if *sweep % TOTAL_REFRESH_SWEEPS == 0 {
            cfg.refresh_total();
        }
    };

    // Burn-in, optionally extended until the windowed mean of |S|²/n moves
    // less than 1% between consecutive windows.
    let mut burnin_used = params.burnin;
    if params.adaptive_burnin && params.burnin >= 4 {
        let window = (params.burnin / 2).max(2);
        let mut prev_mean = f64::NAN;
        let mut acc = 0.0;
        let mut count: u64 = 0;
        let cap = params.burnin * 4;
        while sweep < cap {
            run_sweep(&mut cfg, &mut rng, &mut sweep);
            acc += cfg.total_norm_sq() / params.n as f64;
            count += 1;
            if count == window {
                let mean = acc / count as f64;
                let settled = prev_mean.is_finite() && (mean - prev_mean).abs() <= 0.01 * prev_mean.abs();
                prev_mean = mean;
                acc = 0.0;
                count = 0;
                if sweep >= params.burnin && settled {
                    break;
                }
            }
        }
        burnin_used = sweep;
    } else {
        while sweep < params.burnin {
            run_sweep(&mut cfg, &mut rng, &mut sweep);
        }
    }

    let recording = params.sweeps - params.burnin;
    let mut records = Vec::with_capacity((recording / params.thin) as usize + 1);
    let record_start = sweep;
    while sweep - record_start < recording {
        run_sweep(&mut cfg, &mut rng, &mut sweep);
        if (sweep - record_start) % params.thin == 0 {
            records.push(record(&cfg, sweep));
            observer(sweep, &cfg);
        }
    }

    Ok(SampleSeries { params: *params, burnin_used, records })
}

/// Result of microcanonical rejection sampling.
#[derive(Debug)]
pub struct RejectionSample {
    pub configs: Vec<Configuration>,
    /// Accepted / drawn.
    pub acceptance_rate: f64,
    pub draws: u64,
}

/// Draws i.i.d. uniform configurations and keeps those with total energy
/// `H_n` inside `[u - r, u + r]`.
///
/// Rejection cost grows exponentially with `n`; sizes beyond a few tens are
/// refused. Errors out when the acceptance rate is still below 1e-6 after
/// `budget` draws.
pub fn microcanonical_rejection_sample<R: Rng + ?Sized>(
    n: usize,
    u: f64,
    r: f64,
    count: usize,
    budget: u64,
    rng: &mut R,
) -> Result<RejectionSample> {
    if n < 2 || n > 64 {
        return Err(Error::domain("rejection sampling supports 2 <= n <= 64"));
    }
    let n_f = n as f64;
    if !(u > -n_f / 2.0 && u <= 0.0) {
        return Err(Error::domain(format!(
            "target energy must lie in (-n/2, 0], got {u}"
        )));
    }
    if !(r > 0.0) {
        return Err(Error::domain("window half-width must be positive"));
    }
    let mut configs = Vec::with_capacity(count);
    let mut draws: u64 = 0;
    while configs.len() < count {
        if draws >= budget {
            let rate = configs.len() as f64 / draws as f64;
            if rate < 1e-6 {
                return Err(Error::BudgetExceeded(format!(
                    "acceptance rate {rate:.2e} after {draws} draws"
                )));
            }
            break;
        }
        let cfg = init_uniform(n, rng)?;
        draws += 1;
        if (cfg.energy() - u).abs() <= r {
            configs.push(cfg);
        }
    }
    let acceptance_rate = configs.len() as f64 / draws as f64;
    Ok(RejectionSample { configs, acceptance_rate, draws })
}
