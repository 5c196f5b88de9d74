//! System parameters, power grids and Bob's outage probability.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::game::AliceJammerStrategy;
use crate::specfun::inv_qfunc;

/// Link-level parameters shared by every experiment. Powers and variances are in mW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Channel uses per block.
    pub n: u32,
    /// Noise variance at Bob.
    pub sigma_b2: f64,
    /// Noise variance at each Warden.
    pub sigma_w2: f64,
    /// Target rate in bits per channel use.
    pub rate: f64,
    /// Decoding error probability.
    pub upsilon: f64,
    /// Per-Warden deployment cost weight.
    pub alpha: f64,
    /// Detection-error weight.
    pub beta: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self { n: 200, sigma_b2: 1.0, sigma_w2: 1.0, rate: 0.4, upsilon: 0.1, alpha: 0.1, beta: 1.0 }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Err(domain("SystemParams", detail));
        if self.n == 0 {
            return bad("blocklength n must be at least 1".into());
        }
        if !(self.sigma_b2 > 0.0 && self.sigma_b2.is_finite()) {
            return bad(format!("sigma_b2 = {} must be positive", self.sigma_b2));
        }
        if !(self.sigma_w2 > 0.0 && self.sigma_w2.is_finite()) {
            return bad(format!("sigma_w2 = {} must be positive", self.sigma_w2));
        }
        if !self.rate.is_finite() {
            return bad(format!("rate = {} must be finite", self.rate));
        }
        if !(self.upsilon > 0.0 && self.upsilon < 1.0) {
            return bad(format!("upsilon = {} must lie in (0, 1)", self.upsilon));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha = {} must be non-negative", self.alpha));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta = {} must be non-negative", self.beta));
        }
        Ok(())
    }
}

/// Inclusive arithmetic grid `min, min + spacing, ..., <= max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub spacing: f64,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, spacing: f64) -> Self {
        Self { min, max, spacing }
    }

    /// Grid points generated by index arithmetic and rounded to 12 decimals,
    /// so that e.g. `0.01 + 299 * 0.01` is exactly `3.0`.
    pub fn levels(&self) -> Result<Vec<f64>> {
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(domain("GridSpec", format!("spacing = {} must be positive", self.spacing)));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.max >= self.min) {
            return Err(domain("GridSpec", format!("need finite min <= max, got [{}, {}]", self.min, self.max)));
        }
        let count = ((self.max - self.min) / self.spacing + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|k| {
                let v = self.min + k as f64 * self.spacing;
                (v * 1e12).round() / 1e12
            })
            .collect())
    }
}

pub(crate) fn check_strictly_increasing(what: &str, xs: &[f64], allow_zero: bool) -> Result<()> {
    if xs.is_empty() {
        return Err(domain("grid", format!("{what} must be nonempty")));
    }
    for &x in xs {
        let ok = x.is_finite() && if allow_zero { x >= 0.0 } else { x > 0.0 };
        if !ok {
            return Err(domain("grid", format!("{what} contains invalid level {x}")));
        }
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("grid", format!("{what} must be strictly increasing")));
    }
    Ok(())
}

pub(crate) fn check_strictly_increasing_u32(what: &str, xs: &[u32]) -> Result<()> {
    if xs.is_empty() || xs[0] == 0 || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("grid", format!("{what} must be nonempty, positive and strictly increasing")));
    }
    Ok(())
}

/// Discrete power levels available to Alice and the Jammer (mW).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerGrid {
    alice: Vec<f64>,
    jammer: Vec<f64>,
}

impl PowerGrid {
    /// Alice levels must be positive; Jammer levels may include zero.
    pub fn new(alice: Vec<f64>, jammer: Vec<f64>) -> Result<Self> {
        check_strictly_increasing("alice levels", &alice, false)?;
        check_strictly_increasing("jammer levels", &jammer, true)?;
        Ok(Self { alice, jammer })
    }

    pub fn from_specs(alice: &GridSpec, jammer: &GridSpec) -> Result<Self> {
        Self::new(alice.levels()?, jammer.levels()?)
    }

    pub fn alice(&self) -> &[f64] {
        &self.alice
    }

    pub fn jammer(&self) -> &[f64] {
        &self.jammer
    }

    /// Number of (i, j) pairs.
    pub fn len(&self) -> usize {
        self.alice.len() * self.jammer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pair(&self, i: usize, j: usize) -> PowerPair {
        PowerPair { p_a: self.alice[i], p_j: self.jammer[j] }
    }

    /// All pairs in row-major `(i, j)` order, matching strategy indexing.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, PowerPair)> + '_ {
        (0..self.alice.len())
            .flat_map(move |i| (0..self.jammer.len()).map(move |j| (i, j, self.pair(i, j))))
    }
}

/// One transmit/jamming power realization (mW).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPair {
    pub p_a: f64,
    pub p_j: f64,
}

impl PowerPair {
    pub fn new(p_a: f64, p_j: f64) -> Result<Self> {
        if !(p_a > 0.0 && p_a.is_finite()) {
            return Err(domain("PowerPair", format!("p_a = {p_a} must be positive")));
        }
        if !(p_j >= 0.0 && p_j.is_finite()) {
            return Err(domain("PowerPair", format!("p_j = {p_j} must be non-negative")));
        }
        Ok(Self { p_a, p_j })
    }
}

const TAU_LO: f64 = 1e-9;
const TAU_HI: f64 = 1e6;

/// Finite-blocklength rate achieved at SINR `tau`:
/// `log2(1 + τ) - Q⁻¹(υ) / ((1 + τ) √N ln 2)`.
pub fn achievable_rate(tau: f64, n: u32, upsilon: f64) -> Result<f64> {
    let penalty = inv_qfunc(upsilon)? / ((1.0 + tau) * (n as f64).sqrt() * std::f64::consts::LN_2);
    Ok((1.0 + tau).log2() - penalty)
}

/// SINR threshold τ at which the normal approximation meets the target rate.
pub fn sinr_threshold(params: &SystemParams) -> Result<f64> {
    params.validate()?;
    let f = |tau: f64| achievable_rate(tau, params.n, params.upsilon).map(|r| r - params.rate);
    let (mut lo, mut hi) = (TAU_LO, TAU_HI);
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::InfeasibleRate { rate: params.rate, lo, hi });
    }
    // The rate is increasing in τ over the bracket; shrink to 1e-12 relative.
    while hi - lo > 1e-12 * hi.max(1e-6) {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Rayleigh-fading outage probability at Bob for a fixed power pair:
/// `1 - exp(-τσ_b²/P_A) / (1 + τ P_J / P_A)`.
pub fn outage_pure(pair: PowerPair, tau: f64, sigma_b2: f64) -> f64 {
    let ratio = tau / pair.p_a;
    let success = (-ratio * sigma_b2).exp() / (1.0 + ratio * pair.p_j);
    (1.0 - success).clamp(0.0, 1.0)
}

/// Outage averaged over a joint power strategy.
pub fn outage_mixed(strategy: &AliceJammerStrategy, grid: &PowerGrid, tau: f64, sigma_b2: f64) -> Result<f64> {
    strategy.check_grid(grid)?;
    Ok(grid
        .pairs()
        .map(|(i, j, pair)| strategy.prob(i, j) * outage_pure(pair, tau, sigma_b2))
        .sum())
}

/// Grid indices `(i, j)` whose pure outage does not exceed `target`.
pub fn outage_feasible_set(grid: &PowerGrid, tau: f64, sigma_b2: f64, target: f64) -> Vec<(usize, usize)> {
    grid.pairs()
        .filter(|&(_, _, pair)| outage_pure(pair, tau, sigma_b2) <= target)
        .map(|(i, j, _)| (i, j))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn table_grid(spacing: f64) -> PowerGrid {
        let spec = GridSpec::new(0.01, 3.0, spacing);
        PowerGrid::from_specs(&spec, &spec).unwrap()
    }

    #[test]
    fn grid_levels_are_index_generated() {
        let levels = GridSpec::new(0.01, 3.0, 0.01).levels().unwrap();
        assert_eq!(levels.len(), 300);
        assert_eq!(levels[299], 3.0);
        assert_eq!(levels[1], 0.02);
        let desk = GridSpec::new(0.01, 3.0, 0.05).levels().unwrap();
        assert_eq!(desk.len(), 60);
        assert_eq!(*desk.last().unwrap(), 2.96);
        assert!(GridSpec::new(0.0, 1.0, 0.0).levels().is_err());
        assert!(GridSpec::new(2.0, 1.0, 0.1).levels().is_err());
    }

    #[test]
    fn power_grid_validation() {
        assert!(PowerGrid::new(vec![1.0, 2.0], vec![0.0, 1.0]).is_ok());
        assert!(PowerGrid::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(PowerGrid::new(vec![2.0, 1.0], vec![1.0]).is_err());
        assert!(PowerGrid::new(vec![], vec![1.0]).is_err());
        assert!(PowerPair::new(0.0, 1.0).is_err());
        assert!(PowerPair::new(1.0, -1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::default().validate().is_ok());
        let bad = [
            SystemParams { n: 0, ..Default::default() },
            SystemParams { sigma_b2: 0.0, ..Default::default() },
            SystemParams { sigma_w2: -1.0, ..Default::default() },
            SystemParams { upsilon: 1.0, ..Default::default() },
            SystemParams { alpha: -0.1, ..Default::default() },
            SystemParams { beta: f64::NAN, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn sinr_threshold_table_value() {
        let tau = sinr_threshold(&SystemParams::default()).unwrap();
        assert!((tau - 0.407).abs() < 1e-3, "tau = {tau}");
        let residual = achievable_rate(tau, 200, 0.1).unwrap() - 0.4;
        assert!(residual.abs() <= 1e-9);
    }

    #[test]
    fn sinr_threshold_without_penalty() {
        for n in [1, 50, 200, 100_000] {
            let p = SystemParams { n, upsilon: 0.5, ..Default::default() };
            let tau = sinr_threshold(&p).unwrap();
            assert_relative_eq!(tau, 2f64.powf(0.4) - 1.0, max_relative = 1e-11);
        }
    }

    #[test]
    fn sinr_threshold_long_blocks() {
        let p = SystemParams { n: 1_000_000, ..Default::default() };
        let tau = sinr_threshold(&p).unwrap();
        assert!((tau - 0.319_507_910_772_894_26).abs() < 1e-2);
        assert!(tau > 0.319_507_910_772_894_26);
    }

    #[test]
    fn sinr_threshold_infeasible() {
        let p = SystemParams { rate: 25.0, ..Default::default() };
        assert!(matches!(sinr_threshold(&p), Err(Error::InfeasibleRate { .. })));
        let p = SystemParams { rate: -5.0, ..Default::default() };
        assert!(matches!(sinr_threshold(&p), Err(Error::InfeasibleRate { .. })));
    }

    #[test]
    fn outage_examples() {
        let big = PowerPair::new(1e9, 0.0).unwrap();
        assert!(outage_pure(big, 0.407, 1.0) < 1e-9);
        let p = PowerPair::new(2.0, 0.0).unwrap();
        assert!((outage_pure(p, 0.407, 1.0) - 0.184_129_795_677_326_36).abs() < 1e-14);
        let p = PowerPair::new(2.0, 2.0).unwrap();
        assert!((outage_pure(p, 0.407, 1.0) - 0.420_134_893_871_589_46).abs() < 1e-14);
    }

    #[test]
    fn outage_monotonicity() {
        let levels: Vec<f64> = (1..=50).map(|k| 0.06 * k as f64).collect();
        for &pj in &levels {
            for w in levels.windows(2) {
                let a = outage_pure(PowerPair { p_a: w[0], p_j: pj }, 0.407, 1.0);
                let b = outage_pure(PowerPair { p_a: w[1], p_j: pj }, 0.407, 1.0);
                assert!(b < a);
                assert!((0.0..=1.0).contains(&a));
            }
        }
        for &pa in &levels {
            for w in levels.windows(2) {
                let a = outage_pure(PowerPair { p_a: pa, p_j: w[0] }, 0.407, 1.0);
                let b = outage_pure(PowerPair { p_a: pa, p_j: w[1] }, 0.407, 1.0);
                assert!(b > a);
            }
        }
    }

    #[test]
    fn outage_mixed_examples() {
        let grid = PowerGrid::new(vec![1.0, 2.0, 3.0], vec![0.0, 0.5, 1.0]).unwrap();
        let tau = 0.407;
        let point = AliceJammerStrategy::point(3, 3, 1, 2).unwrap();
        assert_eq!(outage_mixed(&point, &grid, tau, 1.0).unwrap(), outage_pure(grid.pair(1, 2), tau, 1.0));

        let mut probs = vec![0.0; 9];
        probs[0] = 0.5;
        probs[8] = 0.5;
        let two = AliceJammerStrategy::new(3, 3, probs).unwrap();
        let mean = 0.5 * (outage_pure(grid.pair(0, 0), tau, 1.0) + outage_pure(grid.pair(2, 2), tau, 1.0));
        assert!((outage_mixed(&two, &grid, tau, 1.0).unwrap() - mean).abs() < 1e-15);

        // Independent summation straight from the closed form.
        let mut oracle = 0.0;
        for &pa in &[1.0, 2.0, 3.0] {
            for &pj in &[0.0, 0.5, 1.0] {
                oracle += (1.0 - (-tau / pa).exp() / (1.0 + tau * pj / pa)) / 9.0;
            }
        }
        let uniform = AliceJammerStrategy::uniform(3, 3);
        assert!((outage_mixed(&uniform, &grid, tau, 1.0).unwrap() - oracle).abs() < 1e-14);

        let wrong = AliceJammerStrategy::uniform(2, 3);
        assert!(matches!(outage_mixed(&wrong, &grid, tau, 1.0), Err(Error::Shape { .. })));
    }

    #[test]
    fn feasible_set_examples() {
        let grid = table_grid(0.01);
        let tau = 0.407;
        assert_eq!(outage_feasible_set(&grid, tau, 1.0, 1.0).len(), grid.len());
        assert!(outage_feasible_set(&grid, tau, 1.0, 1.0 - 1e-12).len() < grid.len());
        assert!(outage_feasible_set(&grid, tau, 1.0, 1e-12).is_empty());
        let set = outage_feasible_set(&grid, tau, 1.0, 0.5);
        let i = grid.alice().iter().position(|&p| p == 3.0).unwrap();
        let j = grid.jammer().iter().position(|&p| p == 0.01).unwrap();
        assert!(set.contains(&(i, j)));
        assert!(outage_pure(grid.pair(i, j), tau, 1.0) <= 0.5);
    }

    #[test]
    fn outage_is_a_probability_everywhere() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let pair = PowerPair { p_a: rng.gen_range(1e-4..1e4), p_j: rng.gen_range(0.0..1e4) };
            let p = outage_pure(pair, rng.gen_range(1e-4..10.0), rng.gen_range(1e-3..10.0));
            assert!((0.0..=1.0).contains(&p));
        }
    }
}
