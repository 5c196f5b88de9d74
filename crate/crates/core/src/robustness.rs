//! Disjoint robust threshold intervals and the covertness guarantee built on them.
//!
//! For `W ≥ W_min` Wardens the fused statistic has variance `μ²/(W N)`, so by
//! Chebyshev the FC's total error is at least `1 - ε` whenever its threshold
//! lies outside `[μ0 (1 - s), μ1 (1 + s)]` with `s = 1/√(W_min N ε)`. A chain of
//! power pairs with pairwise disjoint intervals leaves the FC able to catch at
//! most one pair per threshold; with Alice–Jammer uniform over `m` pairs the
//! covertness probability is therefore at least `1 - 1/m`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::{error_sum_pure, optimal_threshold, FcAction, FcActionSpace, HypothesisMeans};
use crate::error::{domain, Error, Result};
use crate::game::FcStrategy;
use crate::system::{outage_pure, PowerPair, SystemParams};

/// Safety factor applied on top of the strict separation condition.
pub const SEPARATION_MARGIN: f64 = 1.01;

const BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustInterval {
    pub lo: f64,
    pub hi: f64,
}

impl RobustInterval {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }
}

/// Chebyshev slack `1/√(W_min N ε)`.
pub fn slack(w_min: u32, n: u32, epsilon: f64) -> f64 {
    1.0 / (w_min as f64 * n as f64 * epsilon).sqrt()
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain("robustness", format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    Ok(())
}

/// `[μ0 - μ0 s, μ1 + μ1 s]` with the lower end clamped at 0.
pub fn robust_interval(pair: PowerPair, w_min: u32, n: u32, epsilon: f64, sigma_w2: f64) -> Result<RobustInterval> {
    check_epsilon(epsilon)?;
    if w_min == 0 || n == 0 {
        return Err(domain("robust_interval", "w_min and N must be positive"));
    }
    let means = HypothesisMeans::new(pair, sigma_w2);
    let s = slack(w_min, n, epsilon);
    Ok(RobustInterval { lo: (means.mu0 - means.mu0 * s).max(0.0), hi: means.mu1 + means.mu1 * s })
}

/// Upper power limits for the construction (mW).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCaps {
    pub alice: f64,
    pub jammer: f64,
}

/// Inputs of [`construct_disjoint_pairs`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanSpec {
    pub m: usize,
    pub epsilon: f64,
    pub w_min: u32,
    pub n: u32,
    pub tau: f64,
    pub sigma_b2: f64,
    pub sigma_w2: f64,
    pub outage_target: f64,
    pub caps: PowerCaps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessPlan {
    pub spec: PlanSpec,
    /// Slack factor `√(W_min N ε)`.
    pub slack_factor: f64,
    pub pairs: Vec<PowerPair>,
    pub intervals: Vec<RobustInterval>,
}

/// Smallest Jammer power whose interval starts strictly right of `prev_hi`
/// (no margin): `prev_hi / (1 - s) - σ_w²`.
pub fn separation_jammer_bound(prev_hi: f64, w_min: u32, n: u32, epsilon: f64, sigma_w2: f64) -> Option<f64> {
    let s = slack(w_min, n, epsilon);
    (s < 1.0).then(|| prev_hi / (1.0 - s) - sigma_w2)
}

/// Smallest Alice power meeting the outage target against `p_j`, if below `cap`.
pub fn minimal_alice_power(p_j: f64, tau: f64, sigma_b2: f64, target: f64, cap: f64) -> Option<f64> {
    let outage = |p_a: f64| outage_pure(PowerPair { p_a, p_j }, tau, sigma_b2);
    if outage(cap) > target {
        return None;
    }
    let (mut lo, mut hi) = (0.0_f64, cap);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid > 0.0 && outage(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

fn check_spec(spec: &PlanSpec) -> Result<()> {
    check_epsilon(spec.epsilon)?;
    if spec.m == 0 || spec.w_min == 0 || spec.n == 0 {
        return Err(domain("construct_disjoint_pairs", "m, w_min and N must be positive"));
    }
    if !(spec.outage_target > 0.0 && spec.outage_target < 1.0) {
        return Err(domain("construct_disjoint_pairs", format!("outage target {} must lie in (0, 1)", spec.outage_target)));
    }
    for (what, v) in [("tau", spec.tau), ("sigma_b2", spec.sigma_b2), ("sigma_w2", spec.sigma_w2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(domain("construct_disjoint_pairs", format!("{what} = {v} must be positive")));
        }
    }
    if !(spec.caps.alice > 0.0 && spec.caps.jammer > 0.0) {
        return Err(domain("construct_disjoint_pairs", "power caps must be positive"));
    }
    Ok(())
}

/// Greedy chain of `m` outage-feasible pairs with disjoint robust intervals.
///
/// Each step takes the smallest Jammer power that clears the previous
/// interval by [`SEPARATION_MARGIN`], then the smallest Alice power meeting the
/// outage target. Fails with [`Error::InfeasiblePlan`] when the caps stop the
/// chain early.
pub fn construct_disjoint_pairs(spec: PlanSpec) -> Result<RobustnessPlan> {
    check_spec(&spec)?;
    let mut pairs = Vec::with_capacity(spec.m);
    let mut intervals: Vec<RobustInterval> = Vec::with_capacity(spec.m);
    while pairs.len() < spec.m {
        let p_j = match intervals.last() {
            None => 0.0,
            Some(prev) => {
                match separation_jammer_bound(prev.hi, spec.w_min, spec.n, spec.epsilon, spec.sigma_w2) {
                    Some(bound) => ((bound + spec.sigma_w2) * SEPARATION_MARGIN - spec.sigma_w2).max(0.0),
                    None => break,
                }
            }
        };
        if p_j > spec.caps.jammer {
            break;
        }
        let Some(p_a) = minimal_alice_power(p_j, spec.tau, spec.sigma_b2, spec.outage_target, spec.caps.alice) else {
            break;
        };
        let pair = PowerPair { p_a, p_j };
        intervals.push(robust_interval(pair, spec.w_min, spec.n, spec.epsilon, spec.sigma_w2)?);
        pairs.push(pair);
    }
    if pairs.len() < spec.m {
        return Err(Error::InfeasiblePlan { requested: spec.m, achievable: pairs.len() });
    }
    let plan = RobustnessPlan {
        slack_factor: (spec.w_min as f64 * spec.n as f64 * spec.epsilon).sqrt(),
        spec,
        pairs,
        intervals,
    };
    debug_assert!(plan.check().is_ok());
    Ok(plan)
}

impl RobustnessPlan {
    pub fn m(&self) -> usize {
        self.pairs.len()
    }

    /// Checks disjointness, ordering and outage feasibility.
    pub fn check(&self) -> Result<()> {
        if self.pairs.len() != self.spec.m || self.intervals.len() != self.spec.m {
            return Err(Error::Shape { expected: format!("{} pairs", self.spec.m), got: format!("{}", self.pairs.len()) });
        }
        if self.intervals.windows(2).any(|w| !(w[0].hi < w[1].lo)) {
            return Err(domain("RobustnessPlan", "intervals are not strictly increasing and disjoint"));
        }
        for pair in &self.pairs {
            if outage_pure(*pair, self.spec.tau, self.spec.sigma_b2) > self.spec.outage_target {
                return Err(domain("RobustnessPlan", format!("pair {pair:?} violates the outage target")));
            }
        }
        Ok(())
    }

    fn params(&self) -> SystemParams {
        SystemParams { n: self.spec.n, sigma_w2: self.spec.sigma_w2, sigma_b2: self.spec.sigma_b2, ..Default::default() }
    }

    /// Total error threshold `1 - ε`.
    pub fn covert_level(&self) -> f64 {
        1.0 - self.spec.epsilon
    }

    /// Candidate FC point masses: `W_min` with thresholds at each pair's
    /// optimum and across each interval.
    pub fn adversarial_actions(&self, per_interval: usize) -> Vec<FcAction> {
        let mut out = Vec::new();
        for (pair, iv) in self.pairs.iter().zip(&self.intervals) {
            if let Ok(t) = optimal_threshold(*pair, self.spec.sigma_w2) {
                out.push(FcAction { w: self.spec.w_min, t });
            }
            for k in 0..per_interval {
                let frac = (k as f64 + 0.5) / per_interval as f64;
                let t = iv.lo + frac * (iv.hi - iv.lo);
                if t > 0.0 {
                    out.push(FcAction { w: self.spec.w_min, t });
                }
            }
        }
        out
    }
}

/// One `(pair, action)` cell of the exclusion table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExclusionCell {
    pub pair: usize,
    pub action: usize,
    pub t: f64,
    pub w: u32,
    pub inside: bool,
    pub error_sum: f64,
    /// Chebyshev lower bound on the total error (0 inside the interval).
    pub chebyshev_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionTable {
    pub covert_level: f64,
    pub cells: Vec<ExclusionCell>,
}

impl ExclusionTable {
    /// Cells outside their interval whose exact error falls below `1 - ε`.
    pub fn violations(&self) -> Vec<&ExclusionCell> {
        self.cells.iter().filter(|c| !c.inside && c.error_sum < self.covert_level).collect()
    }

    /// Cells where the exact error is below the Chebyshev bound.
    pub fn bound_violations(&self) -> Vec<&ExclusionCell> {
        self.cells.iter().filter(|c| c.error_sum < c.chebyshev_bound).collect()
    }

    /// Per action, how many pairs the FC detects with error below `1 - ε`.
    pub fn caught_per_action(&self, actions: usize) -> Vec<usize> {
        let mut out = vec![0; actions];
        for c in self.cells.iter().filter(|c| c.error_sum < self.covert_level) {
            out[c.action] += 1;
        }
        out
    }
}

/// Chebyshev lower bound on `P_FA + P_MD` for a threshold outside `[μ0, μ1]`.
pub fn chebyshev_error_bound(pair: PowerPair, action: FcAction, n: u32, sigma_w2: f64) -> f64 {
    let means = HypothesisMeans::new(pair, sigma_w2);
    let k = action.w as f64 * n as f64;
    let tail = |mu: f64, d: f64| (1.0 - mu * mu / (k * d * d)).max(0.0);
    if action.t < means.mu0 {
        tail(means.mu0, means.mu0 - action.t)
    } else if action.t > means.mu1 {
        tail(means.mu1, action.t - means.mu1)
    } else {
        0.0
    }
}

/// Exact error sums for every plan pair against every action.
pub fn verify_interval_exclusion(plan: &RobustnessPlan, actions: &[FcAction]) -> ExclusionTable {
    let params = plan.params();
    let cells = plan
        .pairs
        .par_iter()
        .zip(plan.intervals.par_iter())
        .enumerate()
        .flat_map_iter(|(i, (pair, iv))| {
            let params = &params;
            actions.iter().enumerate().map(move |(a, action)| ExclusionCell {
                pair: i,
                action: a,
                t: action.t,
                w: action.w,
                inside: iv.contains(action.t),
                error_sum: error_sum_pure(*pair, *action, params),
                chebyshev_bound: if iv.contains(action.t) {
                    0.0
                } else {
                    chebyshev_error_bound(*pair, *action, params.n, params.sigma_w2)
                },
            })
        })
        .collect();
    ExclusionTable { covert_level: plan.covert_level(), cells }
}

/// Probability that the FC's total error is at least `1 - ε` when
/// Alice–Jammer pick a plan pair uniformly and the FC plays `fc`.
pub fn covertness_probability(plan: &RobustnessPlan, space: &FcActionSpace, fc: &FcStrategy) -> Result<f64> {
    if fc.w_values() != space.w_set() || fc.dims().1 != space.thresholds().len() {
        return Err(Error::Shape {
            expected: format!("{}x{} FC strategy", space.w_set().len(), space.thresholds().len()),
            got: format!("{}x{}", fc.dims().0, fc.dims().1),
        });
    }
    let params = plan.params();
    let level = plan.covert_level();
    let m = plan.m() as f64;
    let total = space
        .actions()
        .filter(|&(wi, mi, _)| fc.prob(wi, mi) > 0.0)
        .map(|(wi, mi, action)| {
            let covert = plan.pairs.iter().filter(|&&pair| error_sum_pure(pair, action, &params) >= level).count();
            fc.prob(wi, mi) * covert as f64 / m
        })
        .sum();
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: usize, w_min: u32, caps: f64) -> PlanSpec {
        PlanSpec {
            m,
            epsilon: 0.02,
            w_min,
            n: 200,
            tau: 0.407,
            sigma_b2: 1.0,
            sigma_w2: 1.0,
            outage_target: 0.5,
            caps: PowerCaps { alice: caps, jammer: caps },
        }
    }

    #[test]
    fn interval_examples() {
        // μ0 = 3, μ1 = 5 with slack 1/2.
        let iv = robust_interval(PowerPair { p_a: 2.0, p_j: 2.0 }, 1, 200, 0.02, 1.0).unwrap();
        assert!((iv.lo - 1.5).abs() < 1e-12 && (iv.hi - 7.5).abs() < 1e-12);
        let tight = robust_interval(PowerPair { p_a: 2.0, p_j: 2.0 }, 64, 100_000, 1.0 - 1e-12, 1.0).unwrap();
        assert!((tight.lo - 3.0).abs() < 2e-3 && (tight.hi - 5.0).abs() < 2e-3);
        let clamped = robust_interval(PowerPair { p_a: 2.0, p_j: 2.0 }, 1, 10, 0.05, 1.0).unwrap();
        assert_eq!(clamped.lo, 0.0);
        assert!(robust_interval(PowerPair { p_a: 2.0, p_j: 2.0 }, 1, 10, 1.0, 1.0).is_err());
    }

    #[test]
    fn separation_bound_example() {
        // μ1 = 5 needs μ0' > 15, so P_J' > 14.
        let prev = robust_interval(PowerPair { p_a: 2.0, p_j: 2.0 }, 1, 200, 0.02, 1.0).unwrap();
        let bound = separation_jammer_bound(prev.hi, 1, 200, 0.02, 1.0).unwrap();
        assert!((bound - 14.0).abs() < 1e-12);
        assert!(separation_jammer_bound(prev.hi, 1, 10, 0.05, 1.0).is_none());
    }

    #[test]
    fn single_pair_plan() {
        let plan = construct_disjoint_pairs(spec(1, 1, 10.0)).unwrap();
        assert_eq!(plan.m(), 1);
        assert_eq!(plan.pairs[0].p_j, 0.0);
        assert!(outage_pure(plan.pairs[0], 0.407, 1.0) <= 0.5);
        assert!(plan.check().is_ok());
    }

    #[test]
    fn minimal_alice_power_is_tight() {
        let p_a = minimal_alice_power(3.0, 0.407, 1.0, 0.5, 1e6).unwrap();
        let at = outage_pure(PowerPair { p_a, p_j: 3.0 }, 0.407, 1.0);
        let below = outage_pure(PowerPair { p_a: p_a * (1.0 - 1e-9), p_j: 3.0 }, 0.407, 1.0);
        assert!(at <= 0.5 && below > 0.5 - 1e-9);
        assert!(minimal_alice_power(3.0, 0.407, 1.0, 0.5, 1.0).is_none());
    }

    /// Independent recursion: each step needs `μ0' ≥ hi / (1 - s)`, then the
    /// smallest `P_A` on a fine geometric scan meeting the outage target.
    fn oracle_chain(spec: &PlanSpec) -> usize {
        let s = slack(spec.w_min, spec.n, spec.epsilon);
        let mut count = 0;
        let mut hi_prev: Option<f64> = None;
        loop {
            let p_j = match hi_prev {
                None => 0.0,
                Some(h) => h / (1.0 - s) - spec.sigma_w2,
            };
            if p_j > spec.caps.jammer {
                return count;
            }
            // Geometric scan from 1e-6 mW with ratio 1.0001.
            let mut p_a = 1e-6;
            while outage_pure(PowerPair { p_a, p_j }, spec.tau, spec.sigma_b2) > spec.outage_target {
                p_a *= 1.0001;
                if p_a > spec.caps.alice {
                    return count;
                }
            }
            count += 1;
            hi_prev = Some((spec.sigma_w2 + p_j + p_a) * (1.0 + s));
            if count == 64 {
                return count;
            }
        }
    }

    #[test]
    fn ten_pairs_under_caps_1e4() {
        let sp = spec(10, 64, 1e4);
        let plan = construct_disjoint_pairs(sp).unwrap();
        plan.check().unwrap();
        assert!(oracle_chain(&sp) >= 10);
        for w in plan.intervals.windows(2) {
            assert!(w[0].hi < w[1].lo);
        }
        for p in &plan.pairs {
            assert!(p.p_a <= 1e4 && p.p_j <= 1e4);
        }
    }

    #[test]
    fn infeasible_plan_reports_achievable() {
        let sp = spec(10, 1, 1e4);
        let err = construct_disjoint_pairs(sp).unwrap_err();
        let Error::InfeasiblePlan { requested, achievable } = err else { panic!("{err:?}") };
        assert_eq!(requested, 10);
        assert!(achievable < 10);
        // The oracle's chain is never shorter; the margin costs at most one step.
        let oracle = oracle_chain(&sp);
        assert!(achievable == oracle || achievable + 1 == oracle, "{achievable} vs {oracle}");
        assert!(construct_disjoint_pairs(PlanSpec { m: achievable, ..sp }).is_ok());
    }

    #[test]
    fn no_second_pair_when_slack_reaches_one() {
        let sp = PlanSpec { n: 10, epsilon: 0.05, ..spec(2, 1, 1e9) };
        assert!(matches!(construct_disjoint_pairs(sp), Err(Error::InfeasiblePlan { achievable: 1, .. })));
    }

    #[test]
    fn exclusion_examples_on_two_pairs() {
        let plan = construct_disjoint_pairs(spec(2, 1, 1e9)).unwrap();
        let lo = plan.intervals[0].lo;
        let hi = plan.intervals[1].hi;
        let actions: Vec<FcAction> = [lo * 0.5, hi * 2.0]
            .into_iter()
            .chain((1..100).map(|k| lo + (hi - lo) * k as f64 / 100.0))
            .map(|t| FcAction { w: 1, t })
            .collect();
        let table = verify_interval_exclusion(&plan, &actions);
        assert!(table.violations().is_empty());
        assert!(table.bound_violations().is_empty());
        for p in &plan.pairs {
            assert!(crate::detection::pfa_pure(p.p_j, 1, actions[0].t, 200, 1.0) >= 0.98);
            assert!(crate::detection::pmd_pure(p.p_a, p.p_j, 1, actions[1].t, 200, 1.0) >= 0.98);
        }
        assert!(table.caught_per_action(actions.len()).iter().all(|&c| c <= 1));
    }

    #[test]
    fn covertness_examples() {
        let plan = construct_disjoint_pairs(spec(10, 1, 1e9)).unwrap();
        // Point mass on one pair's optimum catches exactly that pair.
        let t = optimal_threshold(plan.pairs[3], 1.0).unwrap();
        let space = FcActionSpace::new(vec![1], vec![t]).unwrap();
        let fc = FcStrategy::uniform(&space);
        assert!((covertness_probability(&plan, &space, &fc).unwrap() - 0.9).abs() < 1e-15);

        // 50 thresholds spread log-uniformly across all intervals.
        let (a, b) = (plan.intervals[0].lo.max(1e-3), plan.intervals[9].hi);
        let ts: Vec<f64> = (0..50).map(|k| a * (b / a).powf(k as f64 / 49.0)).collect();
        let space = FcActionSpace::new(vec![1], ts).unwrap();
        let fc = FcStrategy::uniform(&space);
        let p = covertness_probability(&plan, &space, &fc).unwrap();
        assert!(p >= 0.9 && p <= 1.0);

        let single = construct_disjoint_pairs(spec(1, 1, 1e9)).unwrap();
        let t = optimal_threshold(single.pairs[0], 1.0).unwrap();
        let space = FcActionSpace::new(vec![1], vec![t]).unwrap();
        let p = covertness_probability(&single, &space, &FcStrategy::uniform(&space)).unwrap();
        assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn adversarial_actions_respect_bound() {
        let plan = construct_disjoint_pairs(spec(10, 1, 1e9)).unwrap();
        let actions = plan.adversarial_actions(9);
        assert_eq!(actions.len(), 100);
        let table = verify_interval_exclusion(&plan, &actions);
        assert!(table.caught_per_action(actions.len()).iter().all(|&c| c <= 1));
    }
}
