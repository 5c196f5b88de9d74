//! Monte Carlo estimates of the detection and outage probabilities.
//!
//! Trials are split into fixed-size chunks; chunk `c` draws from a ChaCha8
//! generator seeded with `seed` on stream `c`, so results do not depend on
//! how rayon schedules the chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::{FcAction, HypothesisMeans};
use crate::error::{domain, Result};
use crate::system::{PowerPair, SystemParams};

const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(domain("SimConfig", "trials must be at least 1"));
        }
        Ok(Self { trials, seed })
    }
}

/// Empirical frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub p: f64,
    pub std_err: f64,
    pub hits: u64,
    pub trials: u64,
}

impl Estimate {
    fn from_counts(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Self { p, std_err: (p * (1.0 - p) / trials as f64).sqrt(), hits, trials }
    }

    /// Whether `analytic` lies within `k` binomial standard deviations,
    /// using the analytic probability for the deviation.
    pub fn agrees_with(&self, analytic: f64, k: f64) -> bool {
        let sigma = (analytic * (1.0 - analytic) / self.trials as f64).sqrt();
        (self.p - analytic).abs() <= k * sigma
    }
}

#[inline]
fn exponential(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln()
}

/// Sums `chunk_hits(rng, n)` over all chunks of `trials`.
fn run_chunks(cfg: SimConfig, chunk_hits: impl Fn(&mut ChaCha8Rng, u64) -> (u64, u64) + Sync) -> (u64, u64) {
    let chunks = cfg.trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(c);
            let n = CHUNK.min(cfg.trials - c * CHUNK);
            chunk_hits(&mut rng, n)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}

fn check_config(cfg: SimConfig) -> Result<()> {
    if cfg.trials == 0 {
        return Err(domain("montecarlo", "trials must be at least 1"));
    }
    Ok(())
}

/// Empirical `(P_FA, P_MD)`: the FC averages `W N` exponential energies with
/// mean `μ0` (silence) or `μ1` (transmission) and compares with `t`.
pub fn simulate_detection(pair: PowerPair, action: FcAction, params: &SystemParams, cfg: SimConfig) -> Result<(Estimate, Estimate)> {
    check_config(cfg)?;
    let means = HypothesisMeans::new(pair, params.sigma_w2);
    let k = action.w as u64 * params.n as u64;
    let average = |rng: &mut ChaCha8Rng, mu: f64| (0..k).map(|_| exponential(rng)).sum::<f64>() * mu / k as f64;
    let (fa, md) = run_chunks(cfg, |rng, n| {
        let (mut fa, mut md) = (0, 0);
        for _ in 0..n {
            fa += (average(rng, means.mu0) > action.t) as u64;
            md += (average(rng, means.mu1) <= action.t) as u64;
        }
        (fa, md)
    });
    Ok((Estimate::from_counts(fa, cfg.trials), Estimate::from_counts(md, cfg.trials)))
}

/// Empirical outage: unit-mean exponential channel gains, outage when
/// `P_A g_ab / (P_J g_jb + σ_b²) < τ`.
pub fn simulate_outage(pair: PowerPair, tau: f64, sigma_b2: f64, cfg: SimConfig) -> Result<Estimate> {
    check_config(cfg)?;
    let (hits, _) = run_chunks(cfg, |rng, n| {
        let mut hits = 0;
        for _ in 0..n {
            let g_ab = exponential(rng);
            let g_jb = exponential(rng);
            hits += (pair.p_a * g_ab < tau * (pair.p_j * g_jb + sigma_b2)) as u64;
        }
        (hits, 0)
    });
    Ok(Estimate::from_counts(hits, cfg.trials))
}
