//! Experiment runner for the exclusion-process laboratory: configuration
//! files, result tables and one experiment per subcommand. The numerical
//! work lives in `exlab-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod table;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use config::ExperimentConfig;
use experiments::Outcome;

/// File stem for a table: the subcommand name, plus `-suffix` for
/// secondary tables.
fn stem(cfg: &ExperimentConfig, suffix: &str) -> String {
    if suffix.is_empty() {
        cfg.command().name().to_string()
    } else {
        format!("{}-{suffix}", cfg.command().name())
    }
}

/// The JSON summary: experiment values plus provenance, keys sorted.
pub fn summary_json(cfg: &ExperimentConfig, outcome: &Outcome, wall_time: f64) -> Value {
    let mut m: Map<String, Value> = outcome.summary.clone();
    m.insert("command".into(), cfg.command().name().into());
    m.insert("config_digest".into(), cfg.digest().into());
    m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    m.insert("wall_time_s".into(), wall_time.into());
    m.insert("checks_failed".into(), outcome.failures.clone().into());
    Value::Object(m)
}

/// Writes every table as CSV and the summary as JSON into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, outcome: &Outcome, wall_time: f64) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let digest = cfg.digest();
    let config_text = cfg.to_text();
    let mut written = Vec::new();
    for (suffix, table) in &outcome.tables {
        let path = dir.join(format!("{}.csv", stem(cfg, suffix)));
        fs::write(&path, table.to_csv(&digest, &config_text))?;
        written.push(path);
    }
    let path = dir.join(format!("{}.json", stem(cfg, "")));
    let mut text = serde_json::to_string_pretty(&summary_json(cfg, outcome, wall_time))?;
    text.push('\n');
    fs::write(&path, text)?;
    written.push(path);
    Ok(written)
}
