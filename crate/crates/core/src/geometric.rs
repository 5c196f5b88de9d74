//! Semi-strategic baseline: the Warden count follows a fixed geometric-shaped
//! law and the FC only randomizes its threshold.
//!
//! The FC strategy is the product `g(W) · π(t)`, so the restricted game has
//! one column per threshold with entries `Σ_W g(W) U(r, (W, t))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::game::{solve_matrix, Certificate, FcStrategy, GameSolution, PayoffDecomposition, SolveOptions};
use crate::lpsolve::DenseGame;
use crate::system::check_strictly_increasing_u32;

/// Default flatness budget for the total detection error across `p`.
pub const DEFAULT_FLATNESS_BUDGET: f64 = 0.05;

/// Default Warden-count support.
pub const DEFAULT_SUPPORT: [u32; 4] = [1, 4, 16, 64];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricDeployment {
    pub p: f64,
    pub support: Vec<u32>,
}

impl GeometricDeployment {
    pub fn new(p: f64, support: Vec<u32>) -> Result<Self> {
        let dep = Self { p, support };
        dep.validate()?;
        Ok(dep)
    }

    pub fn with_default_support(p: f64) -> Result<Self> {
        Self::new(p, DEFAULT_SUPPORT.to_vec())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(domain("geometric_weights", format!("p = {} must lie in (0, 1)", self.p)));
        }
        check_strictly_increasing_u32("geometric support", &self.support)
    }
}

/// `(1-p)^(w-1) p` normalized over the support.
///
/// Evaluated relative to the smallest support point so deep tails do not
/// underflow before normalization.
pub fn geometric_weights(dep: &GeometricDeployment) -> Result<Vec<f64>> {
    dep.validate()?;
    let ln_q = (-dep.p).ln_1p();
    let w0 = dep.support[0] as f64;
    let raw: Vec<f64> = dep.support.iter().map(|&w| ((w as f64 - w0) * ln_q).exp()).collect();
    let s: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|x| x / s).collect())
}

/// Restricted game: rows are power pairs, columns are thresholds.
pub fn restricted_game(payoff: &PayoffDecomposition, weights: &[f64]) -> Result<DenseGame> {
    if weights.len() != payoff.w_values().len() {
        return Err(Error::Shape {
            expected: format!("{} Warden weights", payoff.w_values().len()),
            got: format!("{}", weights.len()),
        });
    }
    let m = payoff.threshold_count();
    let rows = payoff.grid_dims().0 * payoff.grid_dims().1;
    let mut data = vec![0.0; rows * m];
    data.par_chunks_exact_mut(m).enumerate().for_each(|(r, row)| {
        for (t, cell) in row.iter_mut().enumerate() {
            *cell = weights.iter().enumerate().map(|(wi, g)| g * payoff.entry(r, wi * m + t)).sum();
        }
    });
    DenseGame::new(rows, m, data)
}

/// Equilibrium of the game where the FC's Warden count follows `dep`.
///
/// `payoff` must be built over exactly `dep.support`.
pub fn solve_restricted_equilibrium(
    dep: &GeometricDeployment,
    payoff: &PayoffDecomposition,
    opts: &SolveOptions,
) -> Result<GameSolution> {
    if payoff.w_values() != dep.support.as_slice() {
        return Err(Error::Shape {
            expected: format!("payoff over W = {:?}", dep.support),
            got: format!("{:?}", payoff.w_values()),
        });
    }
    let g = geometric_weights(dep)?;
    let game = restricted_game(payoff, &g)?;
    let (sol, tol) = solve_matrix(&game, opts)?;
    let fc = FcStrategy::from_parts(
        dep.support.clone(),
        payoff.threshold_count(),
        g.iter().flat_map(|gw| sol.col_strategy.iter().map(move |pt| gw * pt)).collect(),
    );
    let certificate = Certificate {
        upper: sol.upper,
        lower: sol.lower,
        gap: sol.gap,
        tol,
        method: sol.method,
        iterations: sol.iterations,
    };
    Ok(GameSolution::assemble(payoff, sol.row_strategy, fc, sol.value, certificate))
}

/// Spread `max - min` of a series.
pub fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Whether a series of detection errors stays within `budget`.
pub fn is_flat(values: &[f64], budget: f64) -> bool {
    spread(values) <= budget
}
