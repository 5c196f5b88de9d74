//! JSON run manifest written next to every CSV artifact.

use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use softfusion_core::game::Certificate;

use crate::config::ExperimentConfig;

/// Top-level key that marks a JSON document as a run manifest.
pub const MANIFEST_TAG: &str = "softfusion_manifest";

#[derive(Debug, Clone, Serialize)]
pub struct LabeledCertificate {
    pub label: String,
    #[serde(flatten)]
    pub certificate: Certificate,
}

/// Everything a subcommand reports besides its CSV files.
#[derive(Debug, Default)]
pub struct Report {
    pub certificates: Vec<LabeledCertificate>,
    pub summary: Map<String, Value>,
    pub outputs: Vec<String>,
}

impl Report {
    pub fn certify(&mut self, label: impl Into<String>, certificate: Certificate) {
        self.certificates.push(LabeledCertificate { label: label.into(), certificate });
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.to_string(), serde_json::to_value(value).expect("summary value serializes"));
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    softfusion_manifest: u32,
    subcommand: &'a str,
    version: &'a str,
    started_unix_s: u64,
    wall_time_s: f64,
    full_grids: bool,
    tau: f64,
    config: &'a ExperimentConfig,
    outputs: &'a [String],
    summary: &'a Map<String, Value>,
    certificates: &'a [LabeledCertificate],
}

#[allow(clippy::too_many_arguments)]
pub fn write(
    path: &Path,
    subcommand: &str,
    config: &ExperimentConfig,
    tau: f64,
    full_grids: bool,
    started: SystemTime,
    wall: Duration,
    report: &Report,
) -> Result<()> {
    let manifest = Manifest {
        softfusion_manifest: 1,
        subcommand,
        version: env!("CARGO_PKG_VERSION"),
        started_unix_s: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        wall_time_s: wall.as_secs_f64(),
        full_grids,
        tau,
        config,
        outputs: &report.outputs,
        summary: &report.summary,
        certificates: &report.certificates,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
