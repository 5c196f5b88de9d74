//! Experiment configuration: a JSON document with a default for every field.
//!
//! Field-level checks run during deserialization, so a bad value in a config
//! file is reported with its line and column.

use std::fmt;
use std::marker::PhantomData;
use std::path::Path;

use serde::de::value::{MapAccessDeserializer, SeqAccessDeserializer};
use serde::de::{self, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use softfusion_core::game::SolveOptions;
use softfusion_core::system::{sinr_threshold, GridSpec, SystemParams};

/// Problem with the configuration or the command line; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Deserializes a map as `T` and converts it with `check`. The check runs
/// inside the visitor, so the error is positioned at the offending value.
fn checked_map<'de, D, T, U>(d: D, check: fn(T) -> Result<U, String>) -> Result<U, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    struct V<T, U>(fn(T) -> Result<U, String>, PhantomData<T>);
    impl<'de, T: Deserialize<'de>, U> Visitor<'de> for V<T, U> {
        type Value = U;
        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("an object")
        }
        fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<U, A::Error> {
            (self.0)(T::deserialize(MapAccessDeserializer::new(map))?).map_err(de::Error::custom)
        }
    }
    d.deserialize_map(V(check, PhantomData))
}

/// Sequence counterpart of [`checked_map`].
fn checked_seq<'de, D, T, U>(d: D, check: fn(T) -> Result<U, String>) -> Result<U, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    struct V<T, U>(fn(T) -> Result<U, String>, PhantomData<T>);
    impl<'de, T: Deserialize<'de>, U> Visitor<'de> for V<T, U> {
        type Value = U;
        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("an array")
        }
        fn visit_seq<A: SeqAccess<'de>>(self, seq: A) -> Result<U, A::Error> {
            (self.0)(T::deserialize(SeqAccessDeserializer::new(seq))?).map_err(de::Error::custom)
        }
    }
    d.deserialize_seq(V(check, PhantomData))
}

fn fail<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// System parameters checked for validity and a feasible rate target.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
#[serde(into = "SystemParams")]
pub struct Params(pub SystemParams);

impl TryFrom<SystemParams> for Params {
    type Error = String;

    fn try_from(p: SystemParams) -> Result<Self, String> {
        p.validate().map_err(|e| e.to_string())?;
        sinr_threshold(&p).map_err(|e| e.to_string())?;
        Ok(Self(p))
    }
}

impl<'de> Deserialize<'de> for Params {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        checked_map(d, <Self as TryFrom<SystemParams>>::try_from)
    }
}

impl From<Params> for SystemParams {
    fn from(p: Params) -> Self {
        p.0
    }
}

/// A non-empty arithmetic grid of positive levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "GridSpec")]
pub struct Grid(pub GridSpec);

impl Grid {
    pub fn new(min: f64, max: f64, spacing: f64) -> Self {
        Self(GridSpec::new(min, max, spacing))
    }

    pub fn levels(&self) -> Vec<f64> {
        self.0.levels().expect("validated grid")
    }
}

impl TryFrom<GridSpec> for Grid {
    type Error = String;

    fn try_from(g: GridSpec) -> Result<Self, String> {
        if !(g.min > 0.0) {
            return Err(format!("grid min = {} must be positive", g.min));
        }
        g.levels().map_err(|e| e.to_string())?;
        Ok(Self(g))
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        checked_map(d, <Self as TryFrom<GridSpec>>::try_from)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        g.0
    }
}

/// Non-empty list of finite, non-negative weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "Vec<f64>")]
pub struct WeightList(pub Vec<f64>);

impl TryFrom<Vec<f64>> for WeightList {
    type Error = String;

    fn try_from(v: Vec<f64>) -> Result<Self, String> {
        if v.is_empty() {
            return Err("list must not be empty".into());
        }
        if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(format!("weight {x} must be finite and non-negative"));
        }
        Ok(Self(v))
    }
}

impl<'de> Deserialize<'de> for WeightList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        checked_seq(d, <Self as TryFrom<Vec<f64>>>::try_from)
    }
}

impl From<WeightList> for Vec<f64> {
    fn from(w: WeightList) -> Self {
        w.0
    }
}

/// Non-empty list of probabilities strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "Vec<f64>")]
pub struct OpenUnitList(pub Vec<f64>);

impl TryFrom<Vec<f64>> for OpenUnitList {
    type Error = String;

    fn try_from(v: Vec<f64>) -> Result<Self, String> {
        if v.is_empty() {
            return Err("list must not be empty".into());
        }
        if let Some(x) = v.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
            return Err(format!("p = {x} must lie in (0, 1)"));
        }
        Ok(Self(v))
    }
}

impl<'de> Deserialize<'de> for OpenUnitList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        checked_seq(d, <Self as TryFrom<Vec<f64>>>::try_from)
    }
}

impl From<OpenUnitList> for Vec<f64> {
    fn from(w: OpenUnitList) -> Self {
        w.0
    }
}

/// Non-empty, strictly increasing list of positive Warden counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "Vec<u32>")]
pub struct WardenSet(pub Vec<u32>);

impl TryFrom<Vec<u32>> for WardenSet {
    type Error = String;

    fn try_from(v: Vec<u32>) -> Result<Self, String> {
        if v.is_empty() {
            return Err("Warden set must not be empty".into());
        }
        if v[0] == 0 || v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("Warden counts {v:?} must be positive and strictly increasing"));
        }
        Ok(Self(v))
    }
}

impl<'de> Deserialize<'de> for WardenSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        checked_seq(d, <Self as TryFrom<Vec<u32>>>::try_from)
    }
}

impl From<WardenSet> for Vec<u32> {
    fn from(w: WardenSet) -> Self {
        w.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    pub alice: Grid,
    pub jammer: Grid,
    pub threshold: Grid,
}

impl Default for Grids {
    fn default() -> Self {
        Self { alice: Grid::new(0.05, 3.0, 0.05), jammer: Grid::new(0.05, 3.0, 0.05), threshold: Grid::new(0.05, 6.0, 0.05) }
    }
}

impl Grids {
    /// Resolution of the reference experiments.
    pub fn full() -> Self {
        Self { alice: Grid::new(0.01, 3.0, 0.01), jammer: Grid::new(0.01, 3.0, 0.01), threshold: Grid::new(0.01, 6.0, 0.01) }
    }
}

/// Single power pair swept over thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSweep {
    pub p_a: f64,
    pub p_j: f64,
    pub w_list: WardenSet,
    pub grid: Grid,
}

impl Default for ThresholdSweep {
    fn default() -> Self {
        Self { p_a: 2.0, p_j: 2.0, w_list: WardenSet(vec![1]), grid: Grid::new(0.01, 6.0, 0.01) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Geometric {
    pub p_list: OpenUnitList,
    pub support: WardenSet,
}

impl Default for Geometric {
    fn default() -> Self {
        Self { p_list: OpenUnitList(vec![0.1, 0.5]), support: WardenSet(vec![1, 4, 16, 64]) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Robustness {
    pub epsilon: f64,
    pub m: usize,
    pub w_min: u32,
    pub outage_target: f64,
    pub alice_cap: f64,
    pub jammer_cap: f64,
    /// Thresholds probed per interval when checking exclusion.
    pub probes_per_interval: usize,
}

impl Default for Robustness {
    fn default() -> Self {
        Self {
            epsilon: 0.02,
            m: 10,
            w_min: 1,
            outage_target: 0.5,
            alice_cap: 1e9,
            jammer_cap: 1e9,
            probes_per_interval: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarlo {
    pub trials: u64,
    /// Base seed; row `k` of the output uses `seed + k`.
    pub seed: u64,
    /// `[P_A, P_J]` pairs to simulate.
    pub pairs: Vec<[f64; 2]>,
    pub w_list: WardenSet,
    /// Agreement band in binomial standard deviations.
    pub sigmas: f64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 1,
            pairs: vec![[0.1, 0.5], [0.2, 0.0], [2.0, 2.0]],
            w_list: WardenSet(vec![1, 2, 4]),
            sigmas: 4.0,
        }
    }
}

/// Equilibrium solver tolerances and path selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Solver {
    pub dense_tol: f64,
    pub iterative_tol: f64,
    /// Largest `rows × cols` solved with the simplex; bigger games use the iterative path.
    pub dense_limit: usize,
}

impl Default for Solver {
    fn default() -> Self {
        let d = SolveOptions::default();
        Self { dense_tol: d.dense_tol, iterative_tol: d.iterative_tol, dense_limit: d.dense_limit }
    }
}

impl Solver {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            dense_tol: self.dense_tol,
            iterative_tol: self.iterative_tol,
            dense_limit: self.dense_limit,
            ..SolveOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: Params,
    pub grids: Grids,
    pub w_set: WardenSet,
    pub beta_list: WeightList,
    pub alpha_list: WeightList,
    pub threshold_sweep: ThresholdSweep,
    pub geometric: Geometric,
    pub robustness: Robustness,
    pub mc: MonteCarlo,
    pub solver: Solver,
    /// Output directory; `null` falls back to the environment, then `softfusion-out`.
    pub output_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: Params::default(),
            grids: Grids::default(),
            w_set: WardenSet(vec![1, 4, 16, 64]),
            beta_list: WeightList(vec![0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0]),
            alpha_list: WeightList(vec![1e-1, 1e-2, 1e-5, 1e-10]),
            threshold_sweep: ThresholdSweep::default(),
            geometric: Geometric::default(),
            robustness: Robustness::default(),
            mc: MonteCarlo::default(),
            solver: Solver::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses a config file; a run manifest is accepted too and its embedded
    /// config is used.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let cfg = match value.get(crate::manifest::MANIFEST_TAG) {
            Some(_) => {
                let inner = value.get("config").cloned().unwrap_or(Value::Null);
                serde_json::from_value(inner).map_err(|e| ConfigError(format!("{}: manifest config: {e}", path.display())))?
            }
            // Re-parse from text so errors carry line and column.
            None => serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?,
        };
        Self::check(cfg)
    }

    /// Applies a `dotted.path=value` override. The value is read as JSON,
    /// falling back to a plain string.
    pub fn apply_override(self, spec: &str) -> Result<Self, ConfigError> {
        let Some((path, raw)) = spec.split_once('=') else {
            return fail(format!("--set {spec}: expected KEY=VALUE"));
        };
        let new: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        self.set_value(path, new).map_err(|e| ConfigError(format!("--set {spec}: {e}")))
    }

    /// Replaces the field at `path` and re-validates the whole config.
    pub fn set_value(self, path: &str, new: Value) -> Result<Self, ConfigError> {
        let mut tree = serde_json::to_value(&self).expect("config serializes");
        let mut slot = &mut tree;
        for key in path.split('.') {
            slot = match slot {
                Value::Object(map) => match map.get_mut(key) {
                    Some(v) => v,
                    None => return fail(format!("unknown key `{key}` in `{path}`")),
                },
                _ => return fail(format!("`{path}` does not name a config field")),
            };
        }
        *slot = new;
        let cfg = serde_json::from_value(tree).map_err(|e| ConfigError(e.to_string()))?;
        Self::check(cfg)
    }

    /// Cross-field checks that no single field can express.
    fn check(cfg: Self) -> Result<Self, ConfigError> {
        let r = &cfg.robustness;
        if !(r.epsilon > 0.0 && r.epsilon < 1.0) {
            return fail(format!("robustness.epsilon = {} must lie in (0, 1)", r.epsilon));
        }
        if r.m == 0 || r.w_min == 0 {
            return fail("robustness.m and robustness.w_min must be at least 1");
        }
        if !(r.outage_target > 0.0 && r.outage_target <= 1.0) {
            return fail(format!("robustness.outage_target = {} must lie in (0, 1]", r.outage_target));
        }
        if !(r.alice_cap > 0.0 && r.jammer_cap >= 0.0) {
            return fail("robustness caps must be positive");
        }
        if cfg.mc.trials == 0 || cfg.mc.pairs.is_empty() || !(cfg.mc.sigmas > 0.0) {
            return fail("mc.trials, mc.pairs and mc.sigmas must be positive / non-empty");
        }
        if let Some(p) = cfg.mc.pairs.iter().find(|p| !(p[0] > 0.0 && p[1] >= 0.0)) {
            return fail(format!("mc.pairs entry {p:?} needs P_A > 0 and P_J >= 0"));
        }
        let sv = &cfg.solver;
        if !(sv.dense_tol > 0.0 && sv.iterative_tol > 0.0) {
            return fail("solver tolerances must be positive");
        }
        let ts = &cfg.threshold_sweep;
        if !(ts.p_a > 0.0 && ts.p_j >= 0.0) {
            return fail("threshold_sweep needs p_a > 0 and p_j >= 0");
        }
        Ok(cfg)
    }

    pub fn system(&self) -> SystemParams {
        self.params.0
    }
}
