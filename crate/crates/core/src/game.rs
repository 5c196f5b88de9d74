//! The Alice–Jammer vs. Fusion Center zero-sum game.
//!
//! Rows of the game are power pairs `(i, j)` in row-major order (`r = i·J + j`),
//! columns are FC actions `(w_idx, m)` (`c = w_idx·M + m`). Alice–Jammer
//! maximize `1 - P_out + β (P_FA + P_MD) + α W`; the FC minimizes it.
//!
//! The detection term is stored factored: `P_FA` depends only on the Jammer
//! level and `P_MD` only on `μ1 = σ_w² + P_J + P_A`, so both are tabulated once
//! per distinct mean. The full `I·J·|W|·M` tensor is materialized only when it
//! fits the memory budget; otherwise entries are recomputed from the tables.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::FcActionSpace;
use crate::error::{domain, Error, Result};
use crate::lpsolve::{self, MatrixGame, MwuOptions, SolverMethod, ZeroSumSolution};
use crate::specfun::{reg_lower_gamma, reg_upper_gamma};
use crate::system::{outage_pure, PowerGrid, SystemParams};

const SIMPLEX_SUM_TOL: f64 = 1e-9;

fn check_simplex(what: &str, probs: &[f64]) -> Result<()> {
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidStrategy(format!("{what} has a negative or non-finite entry")));
    }
    let s: f64 = probs.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_SUM_TOL {
        return Err(Error::InvalidStrategy(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

/// Joint distribution over power pairs, row-major in `(i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AliceJammerStrategy {
    alice_len: usize,
    jammer_len: usize,
    probs: Vec<f64>,
}

impl AliceJammerStrategy {
    pub fn new(alice_len: usize, jammer_len: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != alice_len * jammer_len || probs.is_empty() {
            return Err(Error::Shape {
                expected: format!("{alice_len}x{jammer_len} probabilities"),
                got: format!("{}", probs.len()),
            });
        }
        check_simplex("Alice–Jammer strategy", &probs)?;
        Ok(Self { alice_len, jammer_len, probs })
    }

    pub fn uniform(alice_len: usize, jammer_len: usize) -> Self {
        let n = alice_len * jammer_len;
        Self { alice_len, jammer_len, probs: vec![1.0 / n as f64; n] }
    }

    pub fn point(alice_len: usize, jammer_len: usize, i: usize, j: usize) -> Result<Self> {
        let mut probs = vec![0.0; alice_len * jammer_len];
        if i >= alice_len || j >= jammer_len {
            return Err(Error::Shape { expected: format!("index below {alice_len}x{jammer_len}"), got: format!("({i}, {j})") });
        }
        probs[i * jammer_len + j] = 1.0;
        Ok(Self { alice_len, jammer_len, probs })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.alice_len, self.jammer_len)
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.jammer_len + j]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn jammer_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.jammer_len];
        for row in self.probs.chunks_exact(self.jammer_len) {
            for (o, p) in out.iter_mut().zip(row) {
                *o += p;
            }
        }
        out
    }

    pub fn alice_marginal(&self) -> Vec<f64> {
        self.probs.chunks_exact(self.jammer_len).map(|row| row.iter().sum()).collect()
    }

    pub(crate) fn check_grid(&self, grid: &PowerGrid) -> Result<()> {
        if self.dims() != (grid.alice().len(), grid.jammer().len()) {
            return Err(Error::Shape {
                expected: format!("{}x{} strategy", grid.alice().len(), grid.jammer().len()),
                got: format!("{}x{}", self.alice_len, self.jammer_len),
            });
        }
        Ok(())
    }
}

/// Joint FC distribution over `(W, t_m)`, row-major in `(w_idx, m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcStrategy {
    w_values: Vec<u32>,
    thresholds: usize,
    probs: Vec<f64>,
}

impl FcStrategy {
    pub fn new(space: &FcActionSpace, probs: Vec<f64>) -> Result<Self> {
        Self::with_dims(space.w_set().to_vec(), space.thresholds().len(), probs)
    }

    fn with_dims(w_values: Vec<u32>, thresholds: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != w_values.len() * thresholds || probs.is_empty() {
            return Err(Error::Shape {
                expected: format!("{}x{} probabilities", w_values.len(), thresholds),
                got: format!("{}", probs.len()),
            });
        }
        check_simplex("FC strategy", &probs)?;
        Ok(Self { w_values, thresholds, probs })
    }

    pub fn uniform(space: &FcActionSpace) -> Self {
        let n = space.len();
        Self { w_values: space.w_set().to_vec(), thresholds: space.thresholds().len(), probs: vec![1.0 / n as f64; n] }
    }

    pub fn point(space: &FcActionSpace, w_idx: usize, m: usize) -> Result<Self> {
        let mut probs = vec![0.0; space.len()];
        let cols = space.thresholds().len();
        if w_idx >= space.w_set().len() || m >= cols {
            return Err(Error::Shape { expected: "action inside the space".into(), got: format!("({w_idx}, {m})") });
        }
        probs[w_idx * cols + m] = 1.0;
        Self::new(space, probs)
    }

    /// Independent product `π(W) · π(t)`.
    pub fn product(space: &FcActionSpace, w_probs: &[f64], t_probs: &[f64]) -> Result<Self> {
        if w_probs.len() != space.w_set().len() || t_probs.len() != space.thresholds().len() {
            return Err(Error::Shape {
                expected: format!("{} W and {} t weights", space.w_set().len(), space.thresholds().len()),
                got: format!("{} and {}", w_probs.len(), t_probs.len()),
            });
        }
        let probs = w_probs.iter().flat_map(|pw| t_probs.iter().map(move |pt| pw * pt)).collect();
        Self::new(space, probs)
    }

    pub(crate) fn from_parts(w_values: Vec<u32>, thresholds: usize, probs: Vec<f64>) -> Self {
        Self { w_values, thresholds, probs }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.w_values.len(), self.thresholds)
    }

    pub fn w_values(&self) -> &[u32] {
        &self.w_values
    }

    pub fn prob(&self, w_idx: usize, m: usize) -> f64 {
        self.probs[w_idx * self.thresholds + m]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// `E[W] = Σ W π(W, t)`.
pub fn expected_wardens(fc: &FcStrategy) -> f64 {
    fc.probs
        .chunks_exact(fc.thresholds)
        .zip(&fc.w_values)
        .map(|(row, &w)| w as f64 * row.iter().sum::<f64>())
        .sum()
}

/// Marginal distributions over the Warden counts and over the thresholds.
pub fn marginals(fc: &FcStrategy) -> (Vec<f64>, Vec<f64>) {
    let w_marg = fc.probs.chunks_exact(fc.thresholds).map(|row| row.iter().sum()).collect();
    let mut t_marg = vec![0.0; fc.thresholds];
    for row in fc.probs.chunks_exact(fc.thresholds) {
        for (o, p) in t_marg.iter_mut().zip(row) {
            *o += p;
        }
    }
    (w_marg, t_marg)
}

/// Utility weights `(α, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub alpha: f64,
    pub beta: f64,
}

/// Default memory budget for materializing the detection tensor.
pub const DEFAULT_MEMORY_BUDGET: u128 = 1 << 30;

/// Utility split into its reliability, detection and cost components.
#[derive(Debug, Clone)]
pub struct PayoffDecomposition {
    alice_len: usize,
    jammer_len: usize,
    w_values: Vec<u32>,
    thresholds: usize,
    /// `1 - P_out` per pair.
    reliability: Vec<f64>,
    /// `P_FA` per `(j, c)`.
    pfa: Vec<f64>,
    /// `P_MD` per `(mean key, c)`.
    pmd: Vec<f64>,
    pmd_key: Vec<u32>,
    /// Materialized `P_FA + P_MD` per `(r, c)`, if within budget.
    dense: Option<Vec<f64>>,
    weights: Weights,
}

/// Builds the payoff decomposition and materializes the detection tensor.
///
/// Fails with [`Error::Capacity`] if `I·J·|W|·M` doubles exceed `budget_bytes`.
pub fn build_payoff(
    grid: &PowerGrid,
    space: &FcActionSpace,
    params: &SystemParams,
    tau: f64,
    budget_bytes: u128,
) -> Result<PayoffDecomposition> {
    let needed = grid.len() as u128 * space.len() as u128 * std::mem::size_of::<f64>() as u128;
    if needed > budget_bytes {
        return Err(Error::Capacity { needed_bytes: needed, budget_bytes });
    }
    let mut payoff = build_payoff_factored(grid, space, params, tau)?;
    let cols = space.len();
    let mut dense = vec![0.0; grid.len() * cols];
    dense.par_chunks_exact_mut(cols).enumerate().for_each(|(r, row)| {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = payoff.factored_detection(r, c);
        }
    });
    payoff.dense = Some(dense);
    Ok(payoff)
}

/// Builds the payoff decomposition without materializing the detection tensor.
pub fn build_payoff_factored(
    grid: &PowerGrid,
    space: &FcActionSpace,
    params: &SystemParams,
    tau: f64,
) -> Result<PayoffDecomposition> {
    params.validate()?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(domain("build_payoff", format!("tau = {tau} must be positive")));
    }
    let cols = space.len();
    let reliability: Vec<f64> = grid.pairs().map(|(_, _, pair)| 1.0 - outage_pure(pair, tau, params.sigma_b2)).collect();

    let actions: Vec<_> = space.actions().map(|(_, _, a)| a).collect();
    let n = params.n;
    let sw = params.sigma_w2;
    let pfa: Vec<f64> = grid
        .jammer()
        .par_iter()
        .flat_map_iter(|&p_j| {
            let mu0 = sw + p_j;
            actions.iter().map(move |a| fa_from_mean(mu0, a.w, a.t, n))
        })
        .collect();

    let mut key_of: HashMap<u64, u32> = HashMap::new();
    let mut means: Vec<f64> = Vec::new();
    let mut pmd_key = Vec::with_capacity(grid.len());
    for (_, _, pair) in grid.pairs() {
        let mu1 = sw + pair.p_j + pair.p_a;
        let key = *key_of.entry(mu1.to_bits()).or_insert_with(|| {
            means.push(mu1);
            (means.len() - 1) as u32
        });
        pmd_key.push(key);
    }
    let pmd: Vec<f64> = means
        .par_iter()
        .flat_map_iter(|&mu1| actions.iter().map(move |a| md_from_mean(mu1, a.w, a.t, n)))
        .collect();
    debug_assert_eq!(pmd.len(), means.len() * cols);

    Ok(PayoffDecomposition {
        alice_len: grid.alice().len(),
        jammer_len: grid.jammer().len(),
        w_values: space.w_set().to_vec(),
        thresholds: space.thresholds().len(),
        reliability,
        pfa,
        pmd,
        pmd_key,
        dense: None,
        weights: Weights { alpha: params.alpha, beta: params.beta },
    })
}

fn fa_from_mean(mu0: f64, w: u32, t: f64, n: u32) -> f64 {
    let k = w as f64 * n as f64;
    reg_upper_gamma(k, k * t / mu0).expect("valid detection inputs")
}

fn md_from_mean(mu1: f64, w: u32, t: f64, n: u32) -> f64 {
    let k = w as f64 * n as f64;
    reg_lower_gamma(k, k * t / mu1).expect("valid detection inputs")
}

impl PayoffDecomposition {
    pub fn with_weights(mut self, alpha: f64, beta: f64) -> Self {
        self.weights = Weights { alpha, beta };
        self
    }

    pub fn set_weights(&mut self, alpha: f64, beta: f64) {
        self.weights = Weights { alpha, beta };
    }

    pub fn weights(&self) -> Weights {
        self.weights
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.alice_len, self.jammer_len)
    }

    pub fn w_values(&self) -> &[u32] {
        &self.w_values
    }

    pub fn threshold_count(&self) -> usize {
        self.thresholds
    }

    pub fn is_materialized(&self) -> bool {
        self.dense.is_some()
    }

    /// `1 - P_out` for row `r`.
    pub fn reliability(&self, r: usize) -> f64 {
        self.reliability[r]
    }

    /// Warden count of column `c`.
    pub fn cost(&self, c: usize) -> f64 {
        self.w_values[c / self.thresholds] as f64
    }

    pub fn pfa(&self, r: usize, c: usize) -> f64 {
        self.pfa[(r % self.jammer_len) * self.w_values.len() * self.thresholds + c]
    }

    pub fn pmd(&self, r: usize, c: usize) -> f64 {
        self.pmd[self.pmd_key[r] as usize * self.w_values.len() * self.thresholds + c]
    }

    #[inline]
    fn factored_detection(&self, r: usize, c: usize) -> f64 {
        self.pfa(r, c) + self.pmd(r, c)
    }

    /// `P_FA + P_MD` for row `r`, column `c`.
    #[inline]
    pub fn detection(&self, r: usize, c: usize) -> f64 {
        match &self.dense {
            Some(d) => d[r * self.w_values.len() * self.thresholds + c],
            None => self.factored_detection(r, c),
        }
    }

    /// Recombined utility `1 - P_out + β (P_FA + P_MD) + α W`.
    #[inline]
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.reliability(r) + self.weights.beta * self.detection(r, c) + self.weights.alpha * self.cost(c)
    }

    /// Operating-point metrics of a strategy pair given as flat probability vectors.
    pub fn metrics(&self, aj: &[f64], fc: &[f64]) -> Metrics {
        let support: Vec<(usize, f64)> = fc.iter().cloned().enumerate().filter(|(_, q)| *q > 0.0).collect();
        let (mut pfa, mut pmd, mut outage) = (0.0, 0.0, 0.0);
        for (r, &p) in aj.iter().enumerate().filter(|(_, p)| **p > 0.0) {
            outage += p * (1.0 - self.reliability[r]);
            for &(c, q) in &support {
                pfa += p * q * self.pfa(r, c);
                pmd += p * q * self.pmd(r, c);
            }
        }
        let expected_w = support.iter().map(|&(c, q)| q * self.cost(c)).sum();
        Metrics { expected_w, pfa, pmd, err_sum: pfa + pmd, outage, one_minus_pout: 1.0 - outage }
    }
}

impl MatrixGame for PayoffDecomposition {
    fn rows(&self) -> usize {
        self.alice_len * self.jammer_len
    }
    fn cols(&self) -> usize {
        self.w_values.len() * self.thresholds
    }
    fn payoff(&self, row: usize, col: usize) -> f64 {
        self.entry(row, col)
    }
}

/// Derived operating-point metrics of an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub expected_w: f64,
    pub pfa: f64,
    pub pmd: f64,
    pub err_sum: f64,
    pub outage: f64,
    pub one_minus_pout: f64,
}

/// Best-response certificate attached to every solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Alice–Jammer best pure response against the FC strategy.
    pub upper: f64,
    /// FC best pure response against the Alice–Jammer strategy.
    pub lower: f64,
    pub gap: f64,
    pub tol: f64,
    pub method: SolverMethod,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    pub value: f64,
    pub aj: AliceJammerStrategy,
    pub fc: FcStrategy,
    pub certificate: Certificate,
    pub metrics: Metrics,
}

/// Solver selection and tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub dense_tol: f64,
    pub iterative_tol: f64,
    /// Games with more than this many `rows × cols` entries use the iterative path.
    pub dense_limit: usize,
    pub mwu: MwuOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { dense_tol: 1e-6, iterative_tol: 1e-3, dense_limit: 20_000_000, mwu: MwuOptions::default() }
    }
}

impl SolveOptions {
    pub fn uses_dense(&self, rows: usize, cols: usize) -> bool {
        rows.saturating_mul(cols) <= self.dense_limit
    }
}

/// Solves any matrix game with the path `opts` selects for its size.
pub fn solve_matrix(game: &impl MatrixGame, opts: &SolveOptions) -> Result<(ZeroSumSolution, f64)> {
    if opts.uses_dense(game.rows(), game.cols()) {
        lpsolve::solve_zero_sum(game, opts.dense_tol).map(|s| (s, opts.dense_tol))
    } else {
        let mwu = MwuOptions { tol: opts.iterative_tol, ..opts.mwu };
        lpsolve::solve_zero_sum_mwu(game, mwu).map(|s| (s, opts.iterative_tol))
    }
}

/// Nash equilibrium of the full `(W, t)` game.
pub fn solve_equilibrium(payoff: &PayoffDecomposition, opts: &SolveOptions) -> Result<GameSolution> {
    let (sol, tol) = solve_matrix(payoff, opts)?;
    let metrics = payoff.metrics(&sol.row_strategy, &sol.col_strategy);
    Ok(GameSolution {
        value: sol.value,
        aj: AliceJammerStrategy { alice_len: payoff.alice_len, jammer_len: payoff.jammer_len, probs: sol.row_strategy },
        fc: FcStrategy { w_values: payoff.w_values.clone(), thresholds: payoff.thresholds, probs: sol.col_strategy },
        certificate: Certificate {
            upper: sol.upper,
            lower: sol.lower,
            gap: sol.gap,
            tol,
            method: sol.method,
            iterations: sol.iterations,
        },
        metrics,
    })
}

/// Which player deviates in [`best_response_value`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// The maximizing row player responds to a column strategy.
    AliceJammer,
    /// The minimizing column player responds to a row strategy.
    FusionCenter,
}

/// Best expected utility a pure deviation of `side` achieves against the
/// opponent's mixed strategy.
pub fn best_response_value(payoff: &impl MatrixGame, opponent: &[f64], side: Side) -> Result<f64> {
    let expected = match side {
        Side::AliceJammer => payoff.cols(),
        Side::FusionCenter => payoff.rows(),
    };
    if opponent.len() != expected {
        return Err(Error::Shape { expected: format!("{expected} probabilities"), got: format!("{}", opponent.len()) });
    }
    check_simplex("opponent strategy", opponent)?;
    Ok(match side {
        Side::AliceJammer => lpsolve::row_best_response(payoff, opponent).1,
        Side::FusionCenter => lpsolve::col_best_response(payoff, opponent).1,
    })
}

impl GameSolution {
    pub(crate) fn assemble(
        payoff: &PayoffDecomposition,
        aj: Vec<f64>,
        fc: FcStrategy,
        value: f64,
        certificate: Certificate,
    ) -> Self {
        let metrics = payoff.metrics(&aj, &fc.probs);
        Self {
            value,
            aj: AliceJammerStrategy { alice_len: payoff.alice_len, jammer_len: payoff.jammer_len, probs: aj },
            fc,
            certificate,
            metrics,
        }
    }
}
