//! Monte Carlo simulation and numerical analysis of the mean-field classical
//! Heisenberg model.
//!
//! The model places `n` unit-vector spins on the 2-sphere with the all-pairs
//! Hamiltonian `H_n = -(1/2n) Σ_{i,j} <σ_i, σ_j>`. At inverse temperature
//! `β` the Gibbs measure has density `e^{-β H_n}` relative to the uniform
//! product measure, and the system undergoes a continuous phase transition at
//! `β_c = 3`: below it the total spin `S_n = Σ σ_i` is diffusive, above it
//! `|S_n|/n` concentrates at `k₂(β)/β` where `k₂` solves `x = β(coth x - 1/x)`.
//!
//! The crate is organized by role:
//!
//! - [`analytic`] — closed-form thermodynamics: the Langevin function and its
//!   inverse, the order parameter, free energy, large-deviation rate
//!   functions, microcanonical entropy, and grid verification of the
//!   inequalities that underpin them.
//! - [`sampler`] — the Gibbs sampler on `(S²)ⁿ` with exact conditional
//!   (von Mises-Fisher) resampling, chain orchestration, and a small-`n`
//!   microcanonical rejection sampler.
//! - [`limits`] — the rescaled observables of the three limit regimes and
//!   exchangeable-pair drift/quadratic-variation diagnostics.
//! - [`stein`] — the characterizing operator of the critical limit law, a
//!   Stein-equation solver with bound certification, and sphere quadrature
//!   oracles for the conditional single-spin law.
//! - [`stats`] — distribution distances (KS, W1), effective sample size, and
//!   tail-rate regression against the analytic rate functions.
//! - [`runner`] — experiment pipelines behind the `heis-mf` binary: config
//!   resolution, chain fan-out, verdict reports, CSV/JSON artifacts.
//!
//! Everything is deterministic given a master seed: each chain derives its
//! own counter-based stream from `(seed, chain_id)`, so re-running a command
//! with the same parameters reproduces results bit for bit.

pub mod analytic;
pub mod config;
pub mod limits;
pub mod quad;
pub mod report;
pub mod rng;
pub mod runner;
pub mod sampler;
pub mod special;
pub mod stats;
pub mod stein;
pub mod vec3;

use thiserror::Error;

/// Errors surfaced by the numerical routines and the run pipelines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Not enough data to carry the computation out.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// A sampling budget was exhausted before the request could be served.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),
    /// Filesystem failure while emitting artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
