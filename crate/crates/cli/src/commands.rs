//! Subcommand implementations. Each one fills CSV tables and a [`Report`].

use std::path::Path;

use anyhow::Result;
use softfusion_core::detection::{argmin_threshold, optimal_threshold, pfa_pure, pmd_pure, FcAction, FcActionSpace};
use softfusion_core::game::{build_payoff, marginals, solve_equilibrium, GameSolution, PayoffDecomposition, DEFAULT_MEMORY_BUDGET};
use softfusion_core::geometric::{geometric_weights, solve_restricted_equilibrium, spread, GeometricDeployment};
use softfusion_core::montecarlo::{simulate_detection, simulate_outage, Estimate, SimConfig};
use softfusion_core::robustness::{
    construct_disjoint_pairs, covertness_probability, verify_interval_exclusion, PlanSpec, PowerCaps,
};
use softfusion_core::system::{outage_pure, PowerGrid, PowerPair};
use softfusion_core::FcStrategy;

use crate::config::ExperimentConfig;
use crate::format::Table;
use crate::manifest::Report;
use crate::row;

pub struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub tau: f64,
    pub out: &'a Path,
    pub report: Report,
}

impl Ctx<'_> {
    fn emit(&mut self, name: &str, table: &Table) -> Result<()> {
        table.write(&self.out.join(name))?;
        self.report.outputs.push(name.to_string());
        Ok(())
    }

    fn payoff(&self, w_set: &[u32]) -> Result<PayoffDecomposition> {
        let g = &self.cfg.grids;
        let grid = PowerGrid::new(g.alice.levels(), g.jammer.levels())?;
        let space = FcActionSpace::new(w_set.to_vec(), g.threshold.levels())?;
        Ok(build_payoff(&grid, &space, &self.cfg.system(), self.tau, DEFAULT_MEMORY_BUDGET)?)
    }

    fn solve(&mut self, label: String, payoff: &PayoffDecomposition) -> Result<GameSolution> {
        let sol = solve_equilibrium(payoff, &self.cfg.solver.options())?;
        self.report.certify(label, sol.certificate);
        Ok(sol)
    }

    fn solve_geometric(&mut self, label: String, p: f64, payoff: &PayoffDecomposition) -> Result<GameSolution> {
        let dep = GeometricDeployment::new(p, self.cfg.geometric.support.0.clone())?;
        let sol = solve_restricted_equilibrium(&dep, payoff, &self.cfg.solver.options())?;
        self.report.certify(label, sol.certificate);
        Ok(sol)
    }
}

/// Emitted probabilities are clamped against last-bit rounding.
fn prob(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Error probabilities of one power pair across a threshold grid.
pub fn threshold_sweep(ctx: &mut Ctx) -> Result<()> {
    let ts = &ctx.cfg.threshold_sweep;
    let params = ctx.cfg.system();
    let pair = PowerPair::new(ts.p_a, ts.p_j)?;
    let grid = ts.grid.levels();
    let mut table = Table::new(&["W", "t", "pfa", "pmd", "err_sum"]);
    let mut argmins = Vec::new();
    for &w in &ts.w_list.0 {
        for &t in &grid {
            let pfa = pfa_pure(pair.p_j, w, t, params.n, params.sigma_w2);
            let pmd = pmd_pure(pair.p_a, pair.p_j, w, t, params.n, params.sigma_w2);
            table.push(row![w, t, prob(pfa), prob(pmd), pfa + pmd]);
        }
        let (_, t) = argmin_threshold(pair, w, params.n, params.sigma_w2, &grid).expect("non-empty grid");
        argmins.push(serde_json::json!({ "W": w, "t": t }));
    }
    ctx.report.note("t_star", optimal_threshold(pair, params.sigma_w2)?);
    ctx.report.note("grid_argmin", argmins);
    ctx.emit("threshold_sweep.csv", &table)
}

/// Detection/reliability trade-off over β for the mixed, fixed and
/// geometric Warden policies.
pub fn tradeoff(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let alpha = cfg.system().alpha;
    let mut full = ctx.payoff(&cfg.w_set.0)?;
    let mut fixed: Vec<(u32, PayoffDecomposition)> =
        cfg.w_set.0.iter().map(|&w| ctx.payoff(&[w]).map(|p| (w, p))).collect::<Result<_>>()?;
    let mut geo = ctx.payoff(&cfg.geometric.support.0)?;
    let mut table = Table::new(&["beta", "W_policy", "p", "pfa", "pmd", "err_sum", "one_minus_pout", "gap"]);
    let push = |table: &mut Table, beta: f64, policy: String, p: Option<f64>, sol: &GameSolution| {
        let m = sol.metrics;
        table.push(row![beta, policy, p, prob(m.pfa), prob(m.pmd), m.err_sum, prob(m.one_minus_pout), sol.certificate.gap]);
    };
    for &beta in &cfg.beta_list.0 {
        full.set_weights(alpha, beta);
        let sol = ctx.solve(format!("mixed beta={beta}"), &full)?;
        push(&mut table, beta, "mixed".into(), None, &sol);
        for (w, payoff) in &mut fixed {
            payoff.set_weights(alpha, beta);
            let sol = ctx.solve(format!("W={w} beta={beta}"), payoff)?;
            push(&mut table, beta, format!("W={w}"), None, &sol);
        }
        geo.set_weights(alpha, beta);
        for &p in &cfg.geometric.p_list.0 {
            let sol = ctx.solve_geometric(format!("geometric p={p} beta={beta}"), p, &geo)?;
            push(&mut table, beta, "geometric".into(), Some(p), &sol);
        }
    }
    ctx.report.note("alpha", alpha);
    ctx.emit("tradeoff.csv", &table)
}

/// Equilibrium strategies and operating point at the configured α, β.
pub fn equilibrium(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let params = cfg.system();
    let payoff = ctx.payoff(&cfg.w_set.0)?;
    let sol = ctx.solve(format!("alpha={} beta={}", params.alpha, params.beta), &payoff)?;
    let (m, c) = (sol.metrics, sol.certificate);

    let mut summary = Table::new(&[
        "alpha", "beta", "value", "expected_w", "pfa", "pmd", "err_sum", "one_minus_pout", "upper", "lower", "gap",
    ]);
    summary.push(row![
        params.alpha,
        params.beta,
        sol.value,
        m.expected_w,
        prob(m.pfa),
        prob(m.pmd),
        m.err_sum,
        prob(m.one_minus_pout),
        c.upper,
        c.lower,
        c.gap
    ]);
    ctx.emit("equilibrium.csv", &summary)?;

    let (w_marg, t_marg) = marginals(&sol.fc);
    let mut w_table = Table::new(&["W", "prob"]);
    for (&w, &p) in sol.fc.w_values().iter().zip(&w_marg) {
        w_table.push(row![w, prob(p)]);
    }
    ctx.emit("equilibrium_fc_w.csv", &w_table)?;

    let thresholds = cfg.grids.threshold.levels();
    let mut t_table = Table::new(&["t", "prob"]);
    for (&t, &p) in thresholds.iter().zip(&t_marg) {
        t_table.push(row![t, prob(p)]);
    }
    ctx.emit("equilibrium_fc_t.csv", &t_table)?;

    let mut fc_support = Table::new(&["W", "t", "prob"]);
    for (wi, &w) in sol.fc.w_values().iter().enumerate() {
        for (mi, &t) in thresholds.iter().enumerate() {
            let p = sol.fc.prob(wi, mi);
            if p > 0.0 {
                fc_support.push(row![w, t, prob(p)]);
            }
        }
    }
    ctx.emit("equilibrium_fc_support.csv", &fc_support)?;

    let (alice, jammer) = (cfg.grids.alice.levels(), cfg.grids.jammer.levels());
    let mut aj_support = Table::new(&["p_a", "p_j", "prob"]);
    for (i, &pa) in alice.iter().enumerate() {
        for (j, &pj) in jammer.iter().enumerate() {
            let p = sol.aj.prob(i, j);
            if p > 0.0 {
                aj_support.push(row![pa, pj, prob(p)]);
            }
        }
    }
    ctx.emit("equilibrium_aj_support.csv", &aj_support)?;

    let mut aj_marg = Table::new(&["player", "power", "prob"]);
    for (&pa, p) in alice.iter().zip(sol.aj.alice_marginal()) {
        aj_marg.push(row!["alice", pa, prob(p)]);
    }
    for (&pj, p) in jammer.iter().zip(sol.aj.jammer_marginal()) {
        aj_marg.push(row!["jammer", pj, prob(p)]);
    }
    ctx.emit("equilibrium_aj_marginals.csv", &aj_marg)?;
    ctx.report.note("metrics", m);
    ctx.report.note("value", sol.value);
    Ok(())
}

/// Expected Warden count against β (at the configured α) and against α
/// (at the configured β).
pub fn ew_sweep(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let params = cfg.system();
    let mut payoff = ctx.payoff(&cfg.w_set.0)?;
    let mut table = Table::new(&["sweep", "alpha", "beta", "expected_w", "value", "err_sum", "one_minus_pout", "gap"]);
    let mut w_table = Table::new(&["sweep", "alpha", "beta", "W", "prob"]);
    let points = cfg
        .beta_list
        .0
        .iter()
        .map(|&b| ("beta", params.alpha, b))
        .chain(cfg.alpha_list.0.iter().map(|&a| ("alpha", a, params.beta)));
    for (sweep, alpha, beta) in points {
        payoff.set_weights(alpha, beta);
        let sol = ctx.solve(format!("{sweep} sweep alpha={alpha} beta={beta}"), &payoff)?;
        let m = sol.metrics;
        table.push(row![sweep, alpha, beta, m.expected_w, sol.value, m.err_sum, prob(m.one_minus_pout), sol.certificate.gap]);
        let (w_marg, _) = marginals(&sol.fc);
        for (&w, &p) in sol.fc.w_values().iter().zip(&w_marg) {
            w_table.push(row![sweep, alpha, beta, w, prob(p)]);
        }
    }
    ctx.emit("ew_sweep.csv", &table)?;
    ctx.emit("ew_sweep_w.csv", &w_table)
}

/// Geometric Warden deployments: metrics per (p, β) and the weights used.
pub fn geometric(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let alpha = cfg.system().alpha;
    let support = &cfg.geometric.support.0;
    let mut payoff = ctx.payoff(support)?;
    let mut weights = Table::new(&["p", "W", "weight"]);
    for &p in &cfg.geometric.p_list.0 {
        let g = geometric_weights(&GeometricDeployment::new(p, support.clone())?)?;
        for (&w, &gw) in support.iter().zip(&g) {
            weights.push(row![p, w, gw]);
        }
    }
    ctx.emit("geometric_weights.csv", &weights)?;

    let mut table = Table::new(&[
        "p", "beta", "alpha", "expected_w", "pfa", "pmd", "err_sum", "one_minus_pout", "value", "gap",
    ]);
    let mut spreads = Vec::new();
    for &p in &cfg.geometric.p_list.0 {
        let mut errs = Vec::new();
        for &beta in &cfg.beta_list.0 {
            payoff.set_weights(alpha, beta);
            let sol = ctx.solve_geometric(format!("geometric p={p} beta={beta}"), p, &payoff)?;
            let m = sol.metrics;
            table.push(row![
                p,
                beta,
                alpha,
                m.expected_w,
                prob(m.pfa),
                prob(m.pmd),
                m.err_sum,
                prob(m.one_minus_pout),
                sol.value,
                sol.certificate.gap
            ]);
            errs.push(m.err_sum);
        }
        spreads.push(serde_json::json!({ "p": p, "err_sum_spread": spread(&errs) }));
    }
    ctx.report.note("err_sum_spread_over_beta", spreads);
    ctx.emit("geometric.csv", &table)
}

/// Builds the disjoint-interval plan and checks it against adversarial FC
/// point masses.
pub fn robustness(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let r = cfg.robustness;
    let params = cfg.system();
    let spec = PlanSpec {
        m: r.m,
        epsilon: r.epsilon,
        w_min: r.w_min,
        n: params.n,
        tau: ctx.tau,
        sigma_b2: params.sigma_b2,
        sigma_w2: params.sigma_w2,
        outage_target: r.outage_target,
        caps: PowerCaps { alice: r.alice_cap, jammer: r.jammer_cap },
    };
    let plan = construct_disjoint_pairs(spec)?;
    let mut plan_table = Table::new(&["k", "p_a", "p_j", "lo", "hi", "outage"]);
    for (k, (pair, iv)) in plan.pairs.iter().zip(&plan.intervals).enumerate() {
        plan_table.push(row![k, pair.p_a, pair.p_j, iv.lo, iv.hi, prob(outage_pure(*pair, ctx.tau, params.sigma_b2))]);
    }
    ctx.emit("robustness_plan.csv", &plan_table)?;

    let actions = plan.adversarial_actions(r.probes_per_interval);
    let exclusion = verify_interval_exclusion(&plan, &actions);
    let caught = exclusion.caught_per_action(actions.len());
    let mut action_table = Table::new(&["action", "W", "t", "pairs_detected", "covertness"]);
    let mut min_covertness: f64 = 1.0;
    for (a, action) in actions.iter().enumerate() {
        let space = FcActionSpace::new(vec![action.w], vec![action.t])?;
        let covert = covertness_probability(&plan, &space, &FcStrategy::uniform(&space))?;
        min_covertness = min_covertness.min(covert);
        action_table.push(row![a, action.w, action.t, caught[a], prob(covert)]);
    }
    ctx.emit("robustness_actions.csv", &action_table)?;

    let bound = 1.0 - 1.0 / plan.m() as f64;
    ctx.report.note("slack_factor", plan.slack_factor);
    ctx.report.note("covertness_bound", bound);
    ctx.report.note("min_covertness", min_covertness);
    ctx.report.note("exclusion_violations", exclusion.violations().len());
    ctx.report.note("chebyshev_violations", exclusion.bound_violations().len());
    Ok(())
}

/// Monte Carlo estimates next to the analytic probabilities.
pub fn validate(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let mc = &cfg.mc;
    let params = cfg.system();
    let mut row_seed = mc.seed;
    let mut next_sim = || {
        let sim = SimConfig::new(mc.trials, row_seed);
        row_seed = row_seed.wrapping_add(1);
        sim
    };
    let mut table =
        Table::new(&["p_a", "p_j", "W", "t", "quantity", "analytic", "empirical", "std_err", "z", "agrees"]);
    let mut disagreements = 0;
    let mut push = |table: &mut Table, pair: PowerPair, action: Option<FcAction>, what: &str, exact: f64, est: Estimate| {
        let sigma = (exact * (1.0 - exact) / est.trials as f64).sqrt();
        let z = if sigma > 0.0 { (est.p - exact) / sigma } else if est.p == exact { 0.0 } else { f64::INFINITY };
        let agrees = est.agrees_with(exact, mc.sigmas);
        disagreements += usize::from(!agrees);
        let (w, t) = (action.map(|a| a.w.to_string()).unwrap_or_default(), action.map(|a| a.t));
        table.push(row![pair.p_a, pair.p_j, w, t, what, prob(exact), est.p, est.std_err, z, agrees]);
    };
    for &[p_a, p_j] in &mc.pairs {
        let pair = PowerPair::new(p_a, p_j)?;
        let t = optimal_threshold(pair, params.sigma_w2)?;
        for &w in &mc.w_list.0 {
            let action = FcAction::new(w, t)?;
            let (fa, md) = simulate_detection(pair, action, &params, next_sim()?)?;
            let pfa = pfa_pure(p_j, w, t, params.n, params.sigma_w2);
            let pmd = pmd_pure(p_a, p_j, w, t, params.n, params.sigma_w2);
            push(&mut table, pair, Some(action), "pfa", pfa, fa);
            push(&mut table, pair, Some(action), "pmd", pmd, md);
        }
        let out = simulate_outage(pair, ctx.tau, params.sigma_b2, next_sim()?)?;
        push(&mut table, pair, None, "outage", outage_pure(pair, ctx.tau, params.sigma_b2), out);
    }
    ctx.report.note("disagreements", disagreements);
    ctx.report.note("sigmas", mc.sigmas);
    ctx.emit("validate.csv", &table)
}
