//! Output plumbing: the JSON result envelope and plot-ready CSV tables.
//!
//! Every artifact carries a reproducibility header (tool version, operation,
//! hash of the resolved config, seed). Timestamps are deliberately absent so
//! identical configs produce byte-identical outputs.

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{config_err, CliResult, ExperimentConfig, Operation};

pub const SCHEMA_VERSION: u32 = 1;

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Hash of the resolved configuration (after flag overrides), so a result
/// file can be traced back to the exact experiment that produced it.
/// Output locations and the thread cap are not part of the experiment and
/// are excluded; results are thread-count independent by construction.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut canonical = cfg.clone();
    canonical.schema_version = Some(SCHEMA_VERSION);
    canonical.output_json = None;
    canonical.output_csv = None;
    canonical.threads = None;
    let text = serde_json::to_string(&canonical).expect("config serializes");
    let digest = Sha256::digest(text.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

pub struct RunContext {
    pub operation: Operation,
    pub config_sha256: String,
    pub seed: u64,
    pub label: String,
}

impl RunContext {
    pub fn new(operation: Operation, cfg: &ExperimentConfig, label: String) -> Self {
        RunContext {
            operation,
            config_sha256: config_hash(cfg),
            seed: cfg.seed(),
            label,
        }
    }

    pub fn envelope<T: Serialize>(&self, result: &T) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "tool_version": tool_version(),
            "operation": self.operation.name(),
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "label": self.label,
            "result": serde_json::to_value(result).expect("result serializes"),
        })
    }

    /// Write the envelope to the given path, or stdout when none is set.
    pub fn emit_json(&self, path: Option<&str>, envelope: &Value) -> CliResult<()> {
        let text = format!("{}\n", serde_json::to_string_pretty(envelope).unwrap());
        match path {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| config_err(format!("cannot write {path}: {e}"))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    /// Open a CSV table with the reproducibility header and column names.
    pub fn csv(&self, columns: &[&str]) -> CsvTable {
        let mut text = format!(
            "# tool_version={} operation={} config_sha256={} seed={}\n",
            tool_version(),
            self.operation.name(),
            self.config_sha256,
            self.seed
        );
        text.push_str(&columns.join(","));
        text.push('\n');
        CsvTable { text }
    }
}

pub struct CsvTable {
    text: String,
}

impl CsvTable {
    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn write(self, path: &str) -> CliResult<()> {
        std::fs::write(path, self.text).map_err(|e| config_err(format!("cannot write {path}: {e}")))
    }
}

/// Shortest-round-trip float formatting; empty for missing optionals.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn fmt_p(p: f64) -> String {
    if p.is_finite() {
        fmt_f64(p)
    } else {
        "inf".to_string()
    }
}
