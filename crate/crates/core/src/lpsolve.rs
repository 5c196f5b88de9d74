//! Zero-sum matrix game solver.
//!
//! The row player maximizes and the column player minimizes. Two paths share
//! one certificate: after solving, both strategies are checked against
//! pure-strategy best responses and the difference of the two best-response
//! values is reported as the duality gap.
//!
//! * [`solve_zero_sum`] shifts the payoffs to be strictly positive and runs a
//!   dense tableau simplex on `max Σy  s.t.  B y <= 1, y >= 0`, oriented so the
//!   smaller player dimension becomes the constraint count. Dantzig pricing is
//!   used, with a switch to Bland's rule after a run of degenerate pivots.
//! * [`solve_zero_sum_mwu`] runs optimistic multiplicative weights on both
//!   players through the [`MatrixGame`] accessor, averaging iterates and
//!   evaluating the gap every epoch. It never materializes the matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Payoff accessor for a finite two-player zero-sum game.
pub trait MatrixGame: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// Payoff to the (maximizing) row player.
    fn payoff(&self, row: usize, col: usize) -> f64;

    /// Expected payoff of every pure row against a column strategy.
    fn row_values(&self, col_strategy: &[f64]) -> Vec<f64> {
        (0..self.rows())
            .map(|r| {
                col_strategy
                    .iter()
                    .enumerate()
                    .filter(|(_, &q)| q != 0.0)
                    .map(|(c, &q)| q * self.payoff(r, c))
                    .sum()
            })
            .collect()
    }

    /// Expected payoff of every pure column against a row strategy.
    fn col_values(&self, row_strategy: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        for (r, &p) in row_strategy.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (c, o) in out.iter_mut().enumerate() {
                *o += p * self.payoff(r, c);
            }
        }
        out
    }
}

/// Row-major dense payoff matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGame {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseGame {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Shape {
                expected: format!("{rows}x{cols} nonempty matrix"),
                got: format!("{} entries", data.len()),
            });
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(crate::error::domain("DenseGame", format!("non-finite payoff {bad}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape { expected: "rectangular rows".into(), got: "ragged rows".into() });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn from_game(game: &impl MatrixGame) -> Result<Self> {
        let (m, n) = (game.rows(), game.cols());
        let mut data = Vec::with_capacity(m * n);
        for r in 0..m {
            data.extend((0..n).map(|c| game.payoff(r, c)));
        }
        Self::new(m, n, data)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl MatrixGame for DenseGame {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    fn payoff(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }
    fn row_values(&self, q: &[f64]) -> Vec<f64> {
        self.data.chunks_exact(self.cols).map(|row| row.iter().zip(q).map(|(a, b)| a * b).sum()).collect()
    }
    fn col_values(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, &pr) in self.data.chunks_exact(self.cols).zip(p) {
            if pr == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(row) {
                *o += pr * a;
            }
        }
        out
    }
}

/// Which algorithm produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    Simplex,
    MultiplicativeWeights,
}

/// Equilibrium strategies plus their best-response certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSumSolution {
    /// Expected payoff `pᵀ A q` under the returned strategies.
    pub value: f64,
    pub row_strategy: Vec<f64>,
    pub col_strategy: Vec<f64>,
    /// Best pure-row payoff against `col_strategy` (upper bound on the value).
    pub upper: f64,
    /// Best pure-column payoff against `row_strategy` (lower bound on the value).
    pub lower: f64,
    /// `upper - lower`, non-negative.
    pub gap: f64,
    pub iterations: usize,
    pub method: SolverMethod,
}

/// Maximum of the row values against `col_strategy`: `(argmax, value)`.
pub fn row_best_response(game: &impl MatrixGame, col_strategy: &[f64]) -> (usize, f64) {
    argext(&game.row_values(col_strategy), |a, b| a > b)
}

/// Minimum of the column values against `row_strategy`: `(argmin, value)`.
pub fn col_best_response(game: &impl MatrixGame, row_strategy: &[f64]) -> (usize, f64) {
    argext(&game.col_values(row_strategy), |a, b| a < b)
}

fn argext(values: &[f64], better: impl Fn(f64, f64) -> bool) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (k, &v) in values.iter().enumerate().skip(1) {
        if better(v, best.1) {
            best = (k, v);
        }
    }
    best
}

/// Clamp round-off negatives and renormalize onto the simplex.
fn project(mut v: Vec<f64>) -> Vec<f64> {
    for x in v.iter_mut() {
        if *x < 0.0 || !x.is_finite() {
            *x = 0.0;
        }
    }
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
    v
}

fn certify(game: &impl MatrixGame, row: Vec<f64>, col: Vec<f64>, iterations: usize, method: SolverMethod) -> ZeroSumSolution {
    let row_vals = game.row_values(&col);
    let upper = row_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let col_vals = game.col_values(&row);
    let lower = col_vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let value: f64 = row.iter().zip(&row_vals).map(|(p, v)| p * v).sum();
    ZeroSumSolution {
        value: value.clamp(lower, upper.max(lower)),
        row_strategy: row,
        col_strategy: col,
        upper,
        lower,
        gap: (upper - lower).max(0.0),
        iterations,
        method,
    }
}

fn check_game(game: &impl MatrixGame, tol: f64) -> Result<()> {
    if game.rows() == 0 || game.cols() == 0 {
        return Err(Error::Shape { expected: "at least one row and column".into(), got: "empty game".into() });
    }
    if !(tol > 0.0) {
        return Err(crate::error::domain("solve_zero_sum", format!("tol = {tol} must be positive")));
    }
    Ok(())
}

const PIVOT_EPS: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const COST_EPS: f64 = 1e-12;
const DEGENERATE_RUN: usize = 50;
const REINVERT_EVERY: usize = 200;

enum DualStep {
    Feasible,
    Stuck,
    Pivot(usize, usize),
}

/// Dense tableau for `max Σ y  s.t.  B y <= 1, y >= 0` with `B > 0`.
struct Tableau {
    k: usize,
    nv: usize,
    width: usize,
    /// `k` constraint rows followed by the objective row.
    cells: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(k: usize, nv: usize, entry: &impl Fn(usize, usize) -> f64) -> Self {
        let width = nv + k + 1;
        let mut cells = vec![0.0; (k + 1) * width];
        for r in 0..k {
            let row = &mut cells[r * width..(r + 1) * width];
            for (v, cell) in row[..nv].iter_mut().enumerate() {
                *cell = entry(r, v);
            }
            row[nv + r] = 1.0;
            row[width - 1] = 1.0;
        }
        let obj = &mut cells[k * width..];
        obj[..nv].iter_mut().for_each(|c| *c = -1.0);
        Self { k, nv, width, cells, basis: (nv..nv + k).collect() }
    }

    fn objective(&self) -> &[f64] {
        &self.cells[self.k * self.width..]
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let obj = &self.objective()[..self.width - 1];
        if bland {
            obj.iter().position(|&c| c < -COST_EPS)
        } else {
            let (idx, &min) = obj.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
            (min < -COST_EPS).then_some(idx)
        }
    }

    /// Harris two-pass ratio test: bound the step with a small feasibility
    /// tolerance, then take the largest pivot among rows within that bound.
    fn leaving(&self, col: usize, bland: bool) -> Option<usize> {
        let w = self.width;
        let mut theta = f64::INFINITY;
        for r in 0..self.k {
            let a = self.cells[r * w + col];
            if a > PIVOT_EPS {
                theta = theta.min((self.cells[r * w + w - 1].max(0.0) + FEAS_TOL) / a);
            }
        }
        if !theta.is_finite() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.k {
            let a = self.cells[r * w + col];
            if a > PIVOT_EPS && self.cells[r * w + w - 1].max(0.0) / a <= theta {
                let better = match best {
                    None => true,
                    Some((br, _)) if bland => self.basis[r] < self.basis[br],
                    Some((_, ba)) => a > ba,
                };
                if better {
                    best = Some((r, a));
                }
            }
        }
        best.map(|(r, _)| r)
    }

    fn pivot(&mut self, prow: usize, pcol: usize) {
        let w = self.width;
        let inv = 1.0 / self.cells[prow * w + pcol];
        let (before, rest) = self.cells.split_at_mut(prow * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        pivot_row.iter_mut().for_each(|x| *x *= inv);
        pivot_row[pcol] = 1.0;
        let eliminate = |row: &mut [f64]| {
            let f = row[pcol];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *x -= f * p;
                }
                row[pcol] = 0.0;
            }
        };
        before.chunks_exact_mut(w).for_each(eliminate);
        after.chunks_exact_mut(w).for_each(eliminate);
        self.basis[prow] = pcol;

    }

    /// Rebuilds the tableau for the current basis from the original entries.
    fn reinvert(&mut self, entry: &impl Fn(usize, usize) -> f64) {
        let target = std::mem::take(&mut self.basis);
        *self = Self::new(self.k, self.nv, entry);
        let mut wanted: Vec<bool> = vec![false; self.nv + self.k];
        for &b in &target {
            wanted[b] = true;
        }
        let nv = self.nv;
        for &b in target.iter().filter(|&&b| b < nv) {
            // Swap `b` in for the largest-magnitude slot held by an unwanted variable.
            let slot = (0..self.k)
                .filter(|&r| !wanted[self.basis[r]])
                .max_by(|&x, &y| self.cells[x * self.width + b].abs().total_cmp(&self.cells[y * self.width + b].abs()));
            match slot {
                Some(r) if self.cells[r * self.width + b].abs() > PIVOT_EPS => self.pivot(r, b),
                _ => {}
            }
        }
    }

    /// One dual simplex step on the most infeasible row of a dual-feasible tableau.
    fn dual_step(&self) -> DualStep {
        let w = self.width;
        let Some(row) = (0..self.k)
            .filter(|&r| self.cells[r * w + w - 1] < -FEAS_TOL)
            .min_by(|&x, &y| self.cells[x * w + w - 1].total_cmp(&self.cells[y * w + w - 1]))
        else {
            return DualStep::Feasible;
        };
        let obj = self.objective();
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..w - 1 {
            let a = self.cells[row * w + j];
            if a < -PIVOT_EPS {
                let ratio = obj[j].max(0.0) / -a;
                let better = match best {
                    None => true,
                    Some((_, br, ba)) => ratio < br - 1e-12 || (ratio <= br + 1e-12 && -a > ba),
                };
                if better {
                    best = Some((j, ratio, -a));
                }
            }
        }
        match best {
            Some((col, _, _)) => DualStep::Pivot(row, col),
            None => DualStep::Stuck,
        }
    }

    /// Runs to optimality; returns the pivot count, or `Err(pivots)` on budget exhaustion.
    ///
    /// The tableau is rebuilt from `entry` periodically and before accepting a
    /// stopping point, so drift cannot end the run early.
    fn run(&mut self, max_pivots: usize, entry: &impl Fn(usize, usize) -> f64) -> std::result::Result<usize, usize> {
        let mut pivots = 0;
        let mut degenerate = 0;
        let mut last_obj = self.objective()[self.width - 1];
        let mut fresh = true;
        let mut since_reinvert = 0;
        loop {
            let step = self
                .entering(degenerate >= DEGENERATE_RUN)
                .map(|col| (col, self.leaving(col, degenerate >= DEGENERATE_RUN)));
            let (col, row) = match step {
                Some((col, Some(row))) => (col, row),
                Some((_, None)) | None if !fresh => {
                    self.reinvert(entry);
                    fresh = true;
                    since_reinvert = 0;
                    continue;
                }
                Some((_, None)) => return Err(pivots),
                None => match self.dual_step() {
                    DualStep::Feasible => return Ok(pivots),
                    DualStep::Stuck => return Err(pivots),
                    DualStep::Pivot(row, col) => (col, row),
                },
            };
            if pivots >= max_pivots {
                return Err(pivots);
            }
            self.pivot(row, col);
            pivots += 1;
            fresh = false;
            since_reinvert += 1;
            let obj = self.objective()[self.width - 1];
            if obj > last_obj + 1e-15 * obj.abs().max(1.0) {
                degenerate = 0;
            } else {
                degenerate += 1;
            }
            last_obj = obj;
            if since_reinvert >= REINVERT_EVERY.max(2 * self.k) {
                self.reinvert(entry);
                fresh = true;
                since_reinvert = 0;
            }
        }
    }

    /// Primal `y` (length `nv`) and dual prices (length `k`).
    fn solution(&self) -> (Vec<f64>, Vec<f64>) {
        let mut y = vec![0.0; self.nv];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.nv {
                y[b] = self.cells[r * self.width + self.width - 1];
            }
        }
        let obj = self.objective();
        let duals = obj[self.nv..self.nv + self.k].to_vec();
        (y, duals)
    }
}

/// Primal values and duals of a basis, solved afresh from the constraint matrix.
fn refine(basis: &[usize], k: usize, nv: usize, entry: &impl Fn(usize, usize) -> f64) -> Option<(Vec<f64>, Vec<f64>)> {
    // Column `b` of the basis matrix, row-major in `a[r * k + col]`.
    let mut a = vec![0.0; k * k];
    for (col, &b) in basis.iter().enumerate() {
        for r in 0..k {
            a[r * k + col] = if b < nv { entry(r, b) } else if b - nv == r { 1.0 } else { 0.0 };
        }
    }
    let mut at = vec![0.0; k * k];
    for r in 0..k {
        for c in 0..k {
            at[c * k + r] = a[r * k + c];
        }
    }
    let xb = solve_linear(a, k, vec![1.0; k])?;
    let cb = basis.iter().map(|&b| if b < nv { 1.0 } else { 0.0 }).collect();
    let duals = solve_linear(at, k, cb)?;
    let mut y = vec![0.0; nv];
    for (&b, &x) in basis.iter().zip(&xb) {
        if b < nv {
            y[b] = x.max(0.0);
        }
    }
    Some((y, duals.into_iter().map(|d| d.max(0.0)).collect()))
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve_linear(mut a: Vec<f64>, n: usize, mut b: Vec<f64>) -> Option<Vec<f64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f != 0.0 {
                for c in col..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r * n + c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Solves a matrix game exactly with the dense simplex path.
///
/// Fails with [`Error::NotConverged`] when the pivot budget is exhausted or
/// the certified gap exceeds `tol`.
pub fn solve_zero_sum(game: &impl MatrixGame, tol: f64) -> Result<ZeroSumSolution> {
    check_game(game, tol)?;
    let (m, n) = (game.rows(), game.cols());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in 0..m {
        for c in 0..n {
            let v = game.payoff(r, c);
            if !v.is_finite() {
                return Err(crate::error::domain("solve_zero_sum", format!("non-finite payoff at ({r}, {c})")));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    // Normalizing to [1, 2] keeps the LP value positive and the tableau well scaled.
    let span = (hi - lo).max(1e-300);
    let transpose = m > n;
    let (k, nv) = if transpose { (n, m) } else { (m, n) };
    // Column player becomes the maximizer of -Aᵀ when transposed.
    let entry = |a: usize, b: usize| {
        if transpose {
            1.0 + (hi - game.payoff(b, a)) / span
        } else {
            1.0 + (game.payoff(a, b) - lo) / span
        }
    };
    let mut tab = Tableau::new(k, nv, &entry);
    let max_pivots = 50 * (k + nv) + 1000;
    let result = tab.run(max_pivots, &entry);
    let pivots = match result {
        Ok(p) | Err(p) => p,
    };
    let orient = |y: Vec<f64>, duals: Vec<f64>| {
        if transpose {
            (project(y), project(duals))
        } else {
            (project(duals), project(y))
        }
    };
    let (y, duals) = tab.solution();
    let (row, col) = orient(y, duals);
    let mut sol = certify(game, row, col, pivots, SolverMethod::Simplex);
    // Recompute the final basis from the original entries to shed pivoting drift.
    if let Some((y, duals)) = refine(&tab.basis, k, nv, &entry) {
        let (row, col) = orient(y, duals);
        let alt = certify(game, row, col, pivots, SolverMethod::Simplex);
        if alt.gap < sol.gap {
            sol = alt;
        }
    }
    if result.is_err() || sol.gap > tol {
        return Err(Error::NotConverged { tol, iterations: pivots, best_gap: sol.gap });
    }
    Ok(sol)
}

/// Options for the multiplicative-weights path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwuOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Iterations between certificate evaluations.
    pub epoch: usize,
    /// Step size in units of the inverse payoff span.
    pub step: f64,
}

impl Default for MwuOptions {
    fn default() -> Self {
        Self { tol: 1e-3, max_iterations: 200_000, epoch: 100, step: 0.5 }
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let hi = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|l| (l - hi).exp()).collect();
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= s);
    out
}

/// Optimistic multiplicative weights with averaged iterates.
///
/// Returns the best certified averaged pair; fails with
/// [`Error::NotConverged`] carrying the best gap if `tol` is not reached.
pub fn solve_zero_sum_mwu(game: &impl MatrixGame, opts: MwuOptions) -> Result<ZeroSumSolution> {
    check_game(game, opts.tol)?;
    let (m, n) = (game.rows(), game.cols());
    let mut span: f64 = 0.0;
    let mut lo = f64::INFINITY;
    for r in 0..m {
        for c in 0..n {
            let v = game.payoff(r, c);
            lo = lo.min(v);
            span = span.max(v);
        }
    }
    span = (span - lo).max(1e-12);
    let eta = opts.step / span;

    let mut row = vec![1.0 / m as f64; m];
    let mut col = vec![1.0 / n as f64; n];
    let mut cum_row = vec![0.0; m];
    let mut cum_col = vec![0.0; n];
    let mut avg_row = vec![0.0; m];
    let mut avg_col = vec![0.0; n];
    let mut best: Option<ZeroSumSolution> = None;

    for it in 1..=opts.max_iterations {
        let u_row = game.row_values(&col);
        let u_col = game.col_values(&row);
        for (a, x) in avg_row.iter_mut().zip(&row) {
            *a += x;
        }
        for (a, x) in avg_col.iter_mut().zip(&col) {
            *a += x;
        }
        for (c, u) in cum_row.iter_mut().zip(&u_row) {
            *c += u;
        }
        for (c, u) in cum_col.iter_mut().zip(&u_col) {
            *c += u;
        }
        // Optimistic step: count the latest payoff twice.
        let lr: Vec<f64> = cum_row.iter().zip(&u_row).map(|(c, u)| eta * (c + u)).collect();
        let lc: Vec<f64> = cum_col.iter().zip(&u_col).map(|(c, u)| -eta * (c + u)).collect();
        row = softmax(&lr);
        col = softmax(&lc);

        if it % opts.epoch == 0 || it == opts.max_iterations {
            let sol = certify(game, project(avg_row.clone()), project(avg_col.clone()), it, SolverMethod::MultiplicativeWeights);
            let done = sol.gap <= opts.tol;
            if best.as_ref().is_none_or(|b| sol.gap < b.gap) {
                best = Some(sol);
            }
            if done {
                return Ok(best.expect("just set"));
            }
        }
    }
    let best = best.expect("at least one epoch");
    Err(Error::NotConverged { tol: opts.tol, iterations: opts.max_iterations, best_gap: best.gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn game(rows: &[&[f64]]) -> DenseGame {
        DenseGame::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_entry() {
        let sol = solve_zero_sum(&game(&[&[0.0]]), 1e-9).unwrap();
        assert_eq!(sol.value, 0.0);
        assert_eq!(sol.row_strategy, vec![1.0]);
        assert_eq!(sol.col_strategy, vec![1.0]);
        assert_eq!(sol.gap, 0.0);
    }

    #[test]
    fn matching_pennies() {
        let g = game(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        let sol = solve_zero_sum(&g, 1e-9).unwrap();
        assert!(sol.value.abs() < 1e-12);
        for p in sol.row_strategy.iter().chain(&sol.col_strategy) {
            assert!((p - 0.5).abs() < 1e-12);
        }
        assert_eq!(row_best_response(&g, &[0.5, 0.5]).1, 0.0);
    }

    #[test]
    fn saddle_point() {
        let g = game(&[&[3.0, 1.0], &[4.0, 2.0]]);
        let sol = solve_zero_sum(&g, 1e-9).unwrap();
        assert!((sol.value - 2.0).abs() < 1e-12);
        assert!((sol.row_strategy[1] - 1.0).abs() < 1e-12);
        assert!((sol.col_strategy[1] - 1.0).abs() < 1e-12);
        assert_eq!(row_best_response(&g, &[1.0, 0.0]), (1, 4.0));
        assert_eq!(col_best_response(&g, &[0.0, 1.0]), (1, 2.0));
    }

    #[test]
    fn tall_and_wide_orientations_agree() {
        let g = game(&[&[2.0, -1.0, 0.5], &[-1.0, 1.0, 0.0], &[0.0, 0.5, -0.5], &[1.0, 1.0, -2.0]]);
        let tall = solve_zero_sum(&g, 1e-9).unwrap();
        let neg_t = DenseGame::new(3, 4, (0..3).flat_map(|c| (0..4).map(move |r| (r, c))).map(|(r, c)| -g.payoff(r, c)).collect()).unwrap();
        let wide = solve_zero_sum(&neg_t, 1e-9).unwrap();
        assert!((tall.value + wide.value).abs() < 1e-10);
        assert!(tall.gap <= 1e-9 && wide.gap <= 1e-9);
    }

    #[test]
    fn mwu_matches_simplex_on_small_games() {
        let g = game(&[&[0.0, 2.0, -1.0], &[-1.0, 0.0, 1.0], &[1.0, -1.0, 0.0]]);
        let exact = solve_zero_sum(&g, 1e-9).unwrap();
        assert!((exact.value - 1.0 / 12.0).abs() < 1e-12);
        let approx = solve_zero_sum_mwu(&g, MwuOptions::default()).unwrap();
        assert!(approx.gap <= 1e-3);
        assert!(approx.lower <= exact.value + 1e-12 && exact.value <= approx.upper + 1e-12);
        assert_eq!(approx.method, SolverMethod::MultiplicativeWeights);
    }

    #[test]
    fn mwu_reports_best_gap_when_budget_runs_out() {
        let g = game(&[&[0.0, 2.0, -1.0], &[-1.0, 0.0, 1.0], &[1.0, -1.0, 0.0]]);
        let opts = MwuOptions { tol: 1e-12, max_iterations: 20, epoch: 5, ..Default::default() };
        match solve_zero_sum_mwu(&g, opts) {
            Err(Error::NotConverged { best_gap, iterations, .. }) => {
                assert!(best_gap > 0.0);
                assert_eq!(iterations, 20);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_games() {
        assert!(DenseGame::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseGame::new(1, 1, vec![f64::NAN]).is_err());
        assert!(DenseGame::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(solve_zero_sum(&game(&[&[1.0]]), 0.0).is_err());
    }
}
