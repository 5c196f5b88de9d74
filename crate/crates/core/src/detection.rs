//! Soft-fusion detection at the Fusion Center.
//!
//! With `W` active Wardens and blocklength `N`, the averaged energy statistic is
//! Gamma distributed with shape `k = W·N` and mean `μ0 = σ_w² + P_J` (silence)
//! or `μ1 = σ_w² + P_J + P_A` (transmission). False alarm is the upper tail
//! above the threshold under `μ0`, missed detection the lower tail under `μ1`.
//! Both tails are evaluated directly so that tiny error probabilities keep
//! their relative accuracy, and log-space variants are provided for sweeps
//! where the error sum underflows.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::game::{AliceJammerStrategy, FcStrategy};
use crate::specfun::{ln_gamma, ln_reg_lower_gamma, ln_reg_upper_gamma, reg_lower_gamma, reg_upper_gamma};
use crate::system::{check_strictly_increasing, check_strictly_increasing_u32, PowerGrid, PowerPair, SystemParams};

/// One Fusion Center action: number of active Wardens and threshold (mW).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcAction {
    pub w: u32,
    pub t: f64,
}

impl FcAction {
    pub fn new(w: u32, t: f64) -> Result<Self> {
        if w == 0 {
            return Err(domain("FcAction", "w must be at least 1"));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(domain("FcAction", format!("threshold t = {t} must be positive")));
        }
        Ok(Self { w, t })
    }
}

/// Warden-count set crossed with a threshold grid. Action `(w_idx, m)` has
/// flat index `w_idx * M + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FcActionSpace {
    w_set: Vec<u32>,
    thresholds: Vec<f64>,
}

impl FcActionSpace {
    pub fn new(w_set: Vec<u32>, thresholds: Vec<f64>) -> Result<Self> {
        check_strictly_increasing_u32("w_set", &w_set)?;
        check_strictly_increasing("thresholds", &thresholds, false)?;
        Ok(Self { w_set, thresholds })
    }

    pub fn w_set(&self) -> &[u32] {
        &self.w_set
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.w_set.len() * self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn action(&self, w_idx: usize, m: usize) -> FcAction {
        FcAction { w: self.w_set[w_idx], t: self.thresholds[m] }
    }

    pub fn actions(&self) -> impl Iterator<Item = (usize, usize, FcAction)> + '_ {
        (0..self.w_set.len())
            .flat_map(move |wi| (0..self.thresholds.len()).map(move |m| (wi, m, self.action(wi, m))))
    }
}

/// Means of the fused statistic under silence and transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisMeans {
    pub mu0: f64,
    pub mu1: f64,
}

impl HypothesisMeans {
    pub fn new(pair: PowerPair, sigma_w2: f64) -> Self {
        let mu0 = sigma_w2 + pair.p_j;
        Self { mu0, mu1: mu0 + pair.p_a }
    }
}

fn shape(w: u32, n: u32) -> f64 {
    w as f64 * n as f64
}

/// False-alarm probability `Q(WN, WN·t / (σ_w² + P_J))`.
///
/// Panics if `w·n == 0` or `t` is negative.
pub fn pfa_pure(p_j: f64, w: u32, t: f64, n: u32, sigma_w2: f64) -> f64 {
    let k = shape(w, n);
    reg_upper_gamma(k, k * t / (sigma_w2 + p_j)).expect("valid detection inputs")
}

/// Missed-detection probability `1 - Q(WN, WN·t / (σ_w² + P_J + P_A))`,
/// evaluated as the lower regularized Gamma function.
pub fn pmd_pure(p_a: f64, p_j: f64, w: u32, t: f64, n: u32, sigma_w2: f64) -> f64 {
    let k = shape(w, n);
    reg_lower_gamma(k, k * t / (sigma_w2 + p_j + p_a)).expect("valid detection inputs")
}

/// Total detection error `P_FA + P_MD` for a fixed power pair and FC action.
pub fn error_sum_pure(pair: PowerPair, action: FcAction, params: &SystemParams) -> f64 {
    pfa_pure(pair.p_j, action.w, action.t, params.n, params.sigma_w2)
        + pmd_pure(pair.p_a, pair.p_j, action.w, action.t, params.n, params.sigma_w2)
}

/// `ln(P_FA + P_MD)`, finite even where both terms underflow.
pub fn log_error_sum_pure(pair: PowerPair, action: FcAction, n: u32, sigma_w2: f64) -> f64 {
    let k = shape(action.w, n);
    let means = HypothesisMeans::new(pair, sigma_w2);
    let ln_fa = ln_reg_upper_gamma(k, k * action.t / means.mu0).expect("valid detection inputs");
    let ln_md = ln_reg_lower_gamma(k, k * action.t / means.mu1).expect("valid detection inputs");
    let hi = ln_fa.max(ln_md);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((ln_fa - hi).exp() + (ln_md - hi).exp()).ln()
}

/// Index and value of the threshold minimizing the error sum; ties resolve to
/// the smallest threshold. The comparison is done in log space.
pub fn argmin_threshold(pair: PowerPair, w: u32, n: u32, sigma_w2: f64, thresholds: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    let mut best_val = f64::INFINITY;
    for (m, &t) in thresholds.iter().enumerate() {
        let v = log_error_sum_pure(pair, FcAction { w, t }, n, sigma_w2);
        if best.is_none() || v < best_val {
            best = Some((m, t));
            best_val = v;
        }
    }
    best
}

fn check_shapes(aj: &AliceJammerStrategy, fc: &FcStrategy, grid: &PowerGrid, space: &FcActionSpace) -> Result<()> {
    aj.check_grid(grid)?;
    if fc.w_values() != space.w_set() || fc.dims().1 != space.thresholds().len() {
        return Err(Error::Shape {
            expected: format!("{}x{} FC strategy", space.w_set().len(), space.thresholds().len()),
            got: format!("{}x{}", fc.dims().0, fc.dims().1),
        });
    }
    Ok(())
}

/// False-alarm probability averaged over both mixed strategies.
///
/// The summand depends on the Jammer level only, so the Alice–Jammer
/// strategy enters through its Jammer marginal.
pub fn pfa_avg(
    aj: &AliceJammerStrategy,
    fc: &FcStrategy,
    grid: &PowerGrid,
    space: &FcActionSpace,
    params: &SystemParams,
) -> Result<f64> {
    check_shapes(aj, fc, grid, space)?;
    let jammer_marginal = aj.jammer_marginal();
    let mut total = 0.0;
    for (j, &q) in jammer_marginal.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        let p_j = grid.jammer()[j];
        let inner: f64 = space
            .actions()
            .map(|(wi, m, a)| fc.prob(wi, m) * pfa_pure(p_j, a.w, a.t, params.n, params.sigma_w2))
            .sum();
        total += q * inner;
    }
    Ok(total)
}

/// Missed-detection probability averaged over both mixed strategies.
pub fn pmd_avg(
    aj: &AliceJammerStrategy,
    fc: &FcStrategy,
    grid: &PowerGrid,
    space: &FcActionSpace,
    params: &SystemParams,
) -> Result<f64> {
    check_shapes(aj, fc, grid, space)?;
    let mut total = 0.0;
    for (i, j, pair) in grid.pairs() {
        let q = aj.prob(i, j);
        if q == 0.0 {
            continue;
        }
        let inner: f64 = space
            .actions()
            .map(|(wi, m, a)| fc.prob(wi, m) * pmd_pure(pair.p_a, pair.p_j, a.w, a.t, params.n, params.sigma_w2))
            .sum();
        total += q * inner;
    }
    Ok(total)
}

/// Threshold minimizing `P_FA + P_MD` for any number of Wardens:
/// `μ0 μ1 ln(μ1 / μ0) / P_A`.
pub fn optimal_threshold(pair: PowerPair, sigma_w2: f64) -> Result<f64> {
    if !(pair.p_a > 0.0 && pair.p_a.is_finite()) {
        return Err(domain("optimal_threshold", format!("p_a = {} must be positive", pair.p_a)));
    }
    if !(sigma_w2 > 0.0) {
        return Err(domain("optimal_threshold", format!("sigma_w2 = {sigma_w2} must be positive")));
    }
    let m = HypothesisMeans::new(pair, sigma_w2);
    // ln(μ1/μ0) = ln1p(P_A/μ0) stays accurate when P_A ≪ μ0.
    Ok(m.mu0 * m.mu1 * (pair.p_a / m.mu0).ln_1p() / pair.p_a)
}

/// The two Gamma-density terms of d/dt (P_FA + P_MD): `(transmit, silence)`.
fn derivative_terms(t: f64, pair: PowerPair, w: u32, n: u32, sigma_w2: f64) -> (f64, f64) {
    let k = shape(w, n);
    let m = HypothesisMeans::new(pair, sigma_w2);
    let ln_gk = ln_gamma(k).expect("positive shape");
    let term = |rate: f64| (rate.ln() + (k - 1.0) * (rate * t).ln() - rate * t - ln_gk).exp();
    (term(k / m.mu1), term(k / m.mu0))
}

/// Derivative of the total detection error with respect to the threshold:
/// the Gamma density of the fused statistic under transmission minus the
/// density under silence, both evaluated at `t`.
pub fn error_derivative(t: f64, pair: PowerPair, w: u32, n: u32, sigma_w2: f64) -> f64 {
    let (under_h1, under_h0) = derivative_terms(t, pair, w, n, sigma_w2);
    under_h1 - under_h0
}

/// Magnitude of the larger derivative term; the natural scale for judging
/// whether the derivative vanishes.
pub fn error_derivative_scale(t: f64, pair: PowerPair, w: u32, n: u32, sigma_w2: f64) -> f64 {
    let (a, b) = derivative_terms(t, pair, w, n, sigma_w2);
    a.max(b)
}
