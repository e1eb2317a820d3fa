//! Run artifacts: `manifest.json`, `report.json` and one CSV per table, all in
//! the output directory. Nothing time- or host-dependent is written.

use std::path::Path;

use humanrate_core::propagation::{HistogramGrid, MetricDistribution, DEFAULT_MC_TRIALS};
use humanrate_core::stats::DEFAULT_ALPHA;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::csvio::write_file;
use crate::error::{io_err, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "table {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

/// Cell formatting shared by all tables.
pub fn cell<T: ToString>(v: T) -> String {
    v.to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub command: String,
    pub report: serde_json::Map<String, Value>,
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            report: serde_json::Map::new(),
            tables: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn section(&mut self, name: &str, value: impl Serialize) -> Result<()> {
        self.report
            .insert(name.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

pub fn manifest(config: &RunConfig, command: &str) -> Result<Value> {
    Ok(json!({
        "tool": "humanrate",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": serde_json::to_value(config)?,
        "defaults": {
            "alpha": DEFAULT_ALPHA,
            "mc_trials": DEFAULT_MC_TRIALS,
            "rmse_histogram": {
                "lower": HistogramGrid::RMSE.lower,
                "bin_width": HistogramGrid::RMSE.bin_width,
                "bins": HistogramGrid::RMSE.bins,
            },
        },
    }))
}

pub fn report_json(out: &RunOutput) -> Value {
    json!({
        "command": out.command,
        "warnings": out.warnings,
        "sections": Value::Object(out.report.clone()),
        "tables": out.tables.iter().map(|t| t.file_name()).collect::<Vec<_>>(),
    })
}

pub fn write_run(config: &RunConfig, out: &RunOutput) -> Result<()> {
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(&dir.join(MANIFEST_FILE), &manifest(config, &out.command)?)?;
    write_json(&dir.join(REPORT_FILE), &report_json(out))?;
    for t in &out.tables {
        let header: Vec<&str> = t.header.iter().map(String::as_str).collect();
        write_file(&dir.join(t.file_name()), &header, &t.rows)?;
    }
    Ok(())
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

/// Rows `(label, bin_lower, bin_upper, count)` including under- and overflow.
pub fn histogram_rows(table: &mut Table, prefix: &[String], dist: &MetricDistribution) {
    let h = &dist.histogram;
    let g = h.grid;
    let mut row = |lo: f64, hi: f64, count: u64| {
        let mut r = prefix.to_vec();
        r.extend([dist.label.clone(), cell(lo), cell(hi), cell(count)]);
        table.push(r);
    };
    row(f64::NEG_INFINITY, g.lower, h.underflow);
    for (b, &c) in h.counts.iter().enumerate() {
        row(g.bin_lower(b), g.bin_lower(b + 1), c);
    }
    row(g.upper(), f64::INFINITY, h.overflow);
}
