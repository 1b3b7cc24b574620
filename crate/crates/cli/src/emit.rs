//! Stable machine-readable outputs: a per-round delimited table and a JSON
//! summary document. Floats are printed with Rust's shortest round-trip
//! formatting, so emitted values re-parse to bitwise-equal numbers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use trustavg_core::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Summary,
    Both,
}

impl std::str::FromStr for OutputFormat {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "summary" => Ok(OutputFormat::Summary),
            "both" => Ok(OutputFormat::Both),
            other => anyhow::bail!("unknown format `{other}` (expected table|summary|both)"),
        }
    }
}

/// One row per (round, node): round, node, x, sigma, the sorted trust set,
/// and any verdicts the node newly set as an observer that round
/// (`subject:status:reason`, `|`-separated, `-` when empty).
pub fn write_table<W: Write>(trace: &Trace, out: &mut W) -> Result<()> {
    writeln!(out, "round,node,x,sigma,trust_set,verdicts")?;
    for row in &trace.rows {
        let verdicts = if row.verdicts.is_empty() {
            "-".to_string()
        } else {
            row.verdicts
                .iter()
                .map(|e| {
                    format!(
                        "{}:{}:{}",
                        e.subject,
                        e.status.as_str(),
                        e.reason.map_or("-", |r| r.as_str())
                    )
                })
                .collect::<Vec<_>>()
                .join("|")
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.round, row.node, row.x, row.sigma, row.trust_set, verdicts
        )?;
    }
    Ok(())
}

/// The summary document: targets, convergence, detection rounds per
/// adversary per observer, and the assumption-violation report.
pub fn write_summary<W: Write>(trace: &Trace, out: &mut W) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, &trace.summary)?;
    writeln!(out)?;
    Ok(())
}

/// Write the selected outputs under `dir` and return the paths written.
pub fn emit_outputs(trace: &Trace, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Table | OutputFormat::Both) {
        let path = dir.join("table.csv");
        let mut buf = Vec::new();
        write_table(trace, &mut buf)?;
        fs::write(&path, buf).with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
    }
    if matches!(format, OutputFormat::Summary | OutputFormat::Both) {
        let path = dir.join("summary.json");
        let mut buf = Vec::new();
        write_summary(trace, &mut buf)?;
        fs::write(&path, buf).with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}
