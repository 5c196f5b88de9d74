//! Structural properties of the power/threshold game.

use proptest::prelude::*;
use softfusion_core::detection::FcActionSpace;
use softfusion_core::game::{
    best_response_value, build_payoff, expected_wardens, marginals, solve_equilibrium, PayoffDecomposition, Side,
    SolveOptions, DEFAULT_MEMORY_BUDGET,
};
use softfusion_core::lpsolve::{solve_zero_sum, DenseGame, MatrixGame};
use softfusion_core::system::{GridSpec, PowerGrid, SystemParams};

fn small_payoff(params: &SystemParams, spacing: f64) -> PayoffDecomposition {
    let spec = GridSpec::new(spacing, 3.0, spacing);
    let grid = PowerGrid::from_specs(&spec, &spec).unwrap();
    let space = FcActionSpace::new(vec![1, 4, 16, 64], GridSpec::new(spacing, 6.0, spacing).levels().unwrap()).unwrap();
    build_payoff(&grid, &space, params, 0.4072712640832127, DEFAULT_MEMORY_BUDGET).unwrap()
}

#[test]
fn zero_beta_puts_all_fc_mass_on_fewest_wardens() {
    for alpha in [1e-6, 0.01, 0.1, 1.0] {
        let payoff = small_payoff(&SystemParams { alpha, beta: 0.0, ..Default::default() }, 0.25);
        let sol = solve_equilibrium(&payoff, &SolveOptions::default()).unwrap();
        let (w_marg, _) = marginals(&sol.fc);
        assert!((w_marg[0] - 1.0).abs() < 1e-12, "alpha={alpha}: {w_marg:?}");
        assert!((expected_wardens(&sol.fc) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn alpha_shifts_entries_in_proportion_to_w() {
    let base = small_payoff(&SystemParams { alpha: 0.01, beta: 2.0, ..Default::default() }, 0.5);
    let bumped = base.clone().with_weights(0.11, 2.0);
    for r in (0..base.rows()).step_by(7) {
        for c in 0..base.cols() {
            let diff = bumped.entry(r, c) - base.entry(r, c);
            assert!((diff - 0.1 * base.cost(c)).abs() < 1e-12);
            assert!(diff > 0.0);
        }
    }
}

#[test]
fn equilibrium_certificates_and_metrics() {
    for beta in [0.1, 1.0, 16.0] {
        let payoff = small_payoff(&SystemParams { alpha: 0.01, beta, ..Default::default() }, 0.25);
        let sol = solve_equilibrium(&payoff, &SolveOptions::default()).unwrap();
        let cert = sol.certificate;
        assert!(cert.gap >= 0.0 && cert.gap <= 1e-6);
        assert!(cert.lower - 1e-12 <= sol.value && sol.value <= cert.upper + 1e-12);
        let up = best_response_value(&payoff, sol.fc.probs(), Side::AliceJammer).unwrap();
        let down = best_response_value(&payoff, sol.aj.probs(), Side::FusionCenter).unwrap();
        assert!(up - down <= 1e-6 && (up - sol.value).abs() <= 1e-6);
        for s in [sol.aj.probs(), sol.fc.probs()] {
            assert!(s.iter().all(|&p| p >= 0.0));
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let (w_marg, t_marg) = marginals(&sol.fc);
        assert!((w_marg.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((t_marg.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        // E[W] recomputed from the W marginal.
        let ew: f64 = w_marg.iter().zip([1.0, 4.0, 16.0, 64.0]).map(|(p, w)| p * w).sum();
        assert!((ew - expected_wardens(&sol.fc)).abs() < 1e-12);
        assert!((ew - sol.metrics.expected_w).abs() < 1e-12);
        let m = sol.metrics;
        for p in [m.pfa, m.pmd, m.outage, m.one_minus_pout] {
            assert!((0.0..=1.0).contains(&p));
        }
        // Value decomposes into the metrics.
        let recombined = m.one_minus_pout + beta * m.err_sum + 0.01 * m.expected_w;
        assert!((recombined - sol.value).abs() < 1e-6);
    }
}

#[test]
fn iterative_path_agrees_with_dense_path() {
    let payoff = small_payoff(&SystemParams { alpha: 0.01, beta: 1.0, ..Default::default() }, 0.5);
    let dense = solve_equilibrium(&payoff, &SolveOptions::default()).unwrap();
    let opts = SolveOptions { dense_limit: 0, ..Default::default() };
    let iterative = solve_equilibrium(&payoff, &opts).unwrap();
    assert!(iterative.certificate.gap <= 1e-3);
    assert_eq!(iterative.certificate.tol, 1e-3);
    assert!((iterative.value - dense.value).abs() <= 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn constant_shift_moves_value_only(c in -5.0f64..5.0, beta in 0.0f64..8.0) {
        let payoff = small_payoff(&SystemParams { alpha: 0.05, beta, ..Default::default() }, 1.0);
        let base = DenseGame::from_game(&payoff).unwrap();
        let shifted = DenseGame::new(base.rows(), base.cols(), base.data().iter().map(|x| x + c).collect()).unwrap();
        let a = solve_zero_sum(&base, 1e-9).unwrap();
        let b = solve_zero_sum(&shifted, 1e-9).unwrap();
        prop_assert!((b.value - a.value - c).abs() < 1e-8);
        // The original equilibrium stays optimal after the shift.
        let up = best_response_value(&shifted, &a.col_strategy, Side::AliceJammer).unwrap();
        let down = best_response_value(&shifted, &a.row_strategy, Side::FusionCenter).unwrap();
        prop_assert!(up - down < 1e-8);
    }
}
