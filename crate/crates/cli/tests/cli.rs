//! End-to-end runs of the `softfusion` binary.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

/// Coarse grids that keep the game solves fast.
const COARSE: [&str; 6] = [
    "--set",
    "grids.alice={\"min\": 0.25, \"max\": 3.0, \"spacing\": 0.25}",
    "--set",
    "grids.jammer={\"min\": 0.25, \"max\": 3.0, \"spacing\": 0.25}",
    "--set",
    "grids.threshold={\"min\": 0.25, \"max\": 6.0, \"spacing\": 0.25}",
];

fn softfusion(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softfusion"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SOFTFUSION_OUT")
        .output()
        .expect("binary runs")
}

fn succeed(args: &[&str], out: &Path) {
    let o = softfusion(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn read_csv(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == name).unwrap();
    rdr.records().map(|r| r.unwrap()[idx].parse().unwrap()).collect()
}

#[test]
fn threshold_sweep_minimum_is_near_reference() {
    let dir = TempDir::new().unwrap();
    succeed(&["threshold-sweep"], dir.path());
    let csv = dir.path().join("threshold_sweep.csv");
    let (t, err) = (column(&csv, "t"), column(&csv, "err_sum"));
    let best = (0..t.len()).min_by(|&a, &b| err[a].total_cmp(&err[b])).unwrap();
    assert!((t[best] - 3.8312).abs() <= 0.01 + 1e-12, "argmin t = {}", t[best]);
    for name in ["pfa", "pmd"] {
        assert!(column(&csv, name).iter().all(|p| (0.0..=1.0).contains(p)));
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("threshold_sweep_manifest.json")).unwrap()).unwrap();
    let t_star = manifest["summary"]["t_star"].as_f64().unwrap();
    assert!((t_star - 3.8312).abs() < 5e-4);
}

#[test]
fn zero_beta_equilibrium_uses_one_warden() {
    let dir = TempDir::new().unwrap();
    succeed(&["equilibrium", "--beta", "0", "--alpha", "0.1"], dir.path());
    let w = read_csv(&dir.path().join("equilibrium_fc_w.csv"));
    assert_eq!(&w[0][0], "1");
    assert_eq!(w[0][1].parse::<f64>().unwrap(), 1.0);
    let summary = dir.path().join("equilibrium.csv");
    assert_eq!(column(&summary, "expected_w"), vec![1.0]);
    assert!(column(&summary, "gap")[0] <= 1e-6);

    // Every strategy file sums to one.
    let sum = |name: &str| column(&dir.path().join(name), "prob").iter().sum::<f64>();
    for name in ["equilibrium_fc_w.csv", "equilibrium_fc_t.csv", "equilibrium_fc_support.csv", "equilibrium_aj_support.csv"] {
        assert!((sum(name) - 1.0).abs() < 1e-6, "{name}");
    }
    let marg = read_csv(&dir.path().join("equilibrium_aj_marginals.csv"));
    for player in ["alice", "jammer"] {
        let s: f64 = marg.iter().filter(|r| &r[0] == player).map(|r| r[2].parse::<f64>().unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-6, "{player}");
    }
}

#[test]
fn geometric_high_beta_row() {
    let dir = TempDir::new().unwrap();
    succeed(&["geometric", "--p", "0.1", "--beta", "16"], dir.path());
    let csv = dir.path().join("geometric.csv");
    assert_eq!(read_csv(&csv).len(), 1);
    let err = column(&csv, "err_sum")[0];
    let rel = column(&csv, "one_minus_pout")[0];
    assert!((0.95..=1.0 + 1e-9).contains(&err), "err_sum = {err}");
    assert!(rel <= 0.05, "1 - P_out = {rel}");
    let weights = column(&dir.path().join("geometric_weights.csv"), "weight");
    assert_eq!(weights.len(), 4);
    assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-5);
}

#[test]
fn tradeoff_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let mut args = vec!["tradeoff", "--set", "beta_list=[0.5, 4]", "--set", "geometric.p_list=[0.3]"];
    args.extend(COARSE);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    succeed(&args, &a);
    succeed(&args, &b);
    let manifest = a.join("tradeoff_manifest.json");
    succeed(&["tradeoff", "--config", manifest.to_str().unwrap()], &c);
    let first = std::fs::read(a.join("tradeoff.csv")).unwrap();
    assert_eq!(first, std::fs::read(b.join("tradeoff.csv")).unwrap());
    assert_eq!(first, std::fs::read(c.join("tradeoff.csv")).unwrap());

    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().next().unwrap(), "beta,W_policy,p,pfa,pmd,err_sum,one_minus_pout,gap");
    // mixed + four fixed W + one geometric policy, per beta.
    assert_eq!(text.lines().count(), 1 + 2 * 6);
    let rows = read_csv(&a.join("tradeoff.csv"));
    let policies: Vec<&str> = rows[..6].iter().map(|r| r.get(1).unwrap()).collect();
    assert_eq!(policies, ["mixed", "W=1", "W=4", "W=16", "W=64", "geometric"]);
    for r in &rows {
        for idx in [3, 4, 6] {
            assert!((0.0..=1.0).contains(&r[idx].parse::<f64>().unwrap()));
        }
        assert!(r[7].parse::<f64>().unwrap() <= 1e-6);
    }
}

#[test]
fn bad_config_exits_two_with_line_number() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"beta_list\": [1.0],\n  \"grids\": {\"alice\": {\"min\": 0.1, \"max\": 3.0, \"spacing\": 0}}\n}\n")
        .unwrap();
    let o = softfusion(&["equilibrium", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("line 3"), "{stderr}");

    std::fs::write(&cfg, "{\n  \"unknown_field\": 1\n}\n").unwrap();
    let o = softfusion(&["equilibrium", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    for bad in ["grids.alice.spacing=-1", "no.such.key=1", "w_set=[]"] {
        let o = softfusion(&["threshold-sweep", "--set", bad], dir.path());
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("--set"));
    }
    let o = softfusion(&["geometric", "--p", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_plan_exits_three() {
    let dir = TempDir::new().unwrap();
    let o = softfusion(&["robustness", "--set", "robustness.jammer_cap=10"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("largest achievable is"));
}

#[test]
fn robustness_plan_meets_its_bound() {
    let dir = TempDir::new().unwrap();
    succeed(&["robustness"], dir.path());
    let plan = dir.path().join("robustness_plan.csv");
    let (lo, hi) = (column(&plan, "lo"), column(&plan, "hi"));
    assert_eq!(lo.len(), 10);
    assert!((1..10).all(|k| hi[k - 1] < lo[k]));
    assert!(column(&plan, "outage").iter().all(|&p| p <= 0.5 + 1e-6));
    let covert = column(&dir.path().join("robustness_actions.csv"), "covertness");
    assert!(covert.iter().all(|&c| c >= 0.9 - 1e-6));
}

#[test]
fn validate_agrees_within_band() {
    let dir = TempDir::new().unwrap();
    succeed(&["validate", "--set", "mc.trials=20000"], dir.path());
    let rows = read_csv(&dir.path().join("validate.csv"));
    assert_eq!(rows.len(), 3 * (3 * 2 + 1));
    assert!(rows.iter().all(|r| &r[9] == "true"));
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_softfusion"))
        .args(["threshold-sweep", "--set", "threshold_sweep.grid={\"min\": 1, \"max\": 5, \"spacing\": 1}"])
        .env("SOFTFUSION_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(read_csv(&dir.path().join("threshold_sweep.csv")).len(), 5);
}

#[test]
fn config_subcommand_round_trips() {
    let dir = TempDir::new().unwrap();
    let o = softfusion(&["config", "--beta", "2"], dir.path());
    assert!(o.status.success());
    let path = dir.path().join("resolved.json");
    std::fs::write(&path, &o.stdout).unwrap();
    let again = softfusion(&["config", "--config", path.to_str().unwrap()], dir.path());
    assert_eq!(o.stdout, again.stdout);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["params"]["beta"], 2.0);
    assert_eq!(v["beta_list"], serde_json::json!([2.0]));
}
