use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::target::TargetInfo;

/// What a subcommand hands back for emission.
#[derive(Debug, Default)]
pub struct Outcome {
    pub results: Value,
    pub violations: usize,
    pub findings: Value,
    /// `(file suffix, contents)`; an empty suffix names the main CSV.
    pub csv: Vec<(String, String)>,
    /// `(file suffix with extension, contents)` written only with `--out`.
    pub extra: Vec<(String, String)>,
    /// Human-readable aligned table.
    pub table: String,
    /// Without `--out`, print the main CSV instead of the JSON report.
    pub csv_primary: bool,
}

/// Field order is the on-disk order; `timestamp` must stay first so that
/// reports of identical runs differ only in their second line.
#[derive(Debug, Serialize)]
pub struct RunReport<'a> {
    pub timestamp: String,
    pub command: &'a str,
    pub seed: u64,
    pub target: Option<TargetInfo>,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub version: &'static str,
    pub results: &'a Value,
    pub violations: usize,
    pub findings: &'a Value,
}

pub fn timestamp() -> String {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    format!("{}.{:09}", now.as_secs(), now.subsec_nanos())
}

/// Parses `secs.nanos` into a comparable pair.
pub fn parse_timestamp(s: &str) -> Option<(u64, u32)> {
    let (secs, nanos) = s.split_once('.').unwrap_or((s, "0"));
    Some((secs.parse().ok()?, nanos.parse().ok()?))
}

pub fn file_stem(command: &str, seed: u64) -> String {
    format!("{}-{seed}", command.replace(' ', "-"))
}

pub fn emit(report: &RunReport<'_>, outcome: &Outcome, out: Option<&Path>) -> std::io::Result<()> {
    let json = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    let stdout = std::io::stdout();
    let mut stdout = stdout.lock();
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let stem = file_stem(report.command, report.seed);
            fs::write(dir.join(format!("{stem}.json")), &json)?;
            for (suffix, body) in &outcome.csv {
                let name = if suffix.is_empty() { format!("{stem}.csv") } else { format!("{stem}-{suffix}.csv") };
                fs::write(dir.join(name), body)?;
            }
            for (suffix, body) in &outcome.extra {
                fs::write(dir.join(format!("{stem}-{suffix}")), body)?;
            }
            if !outcome.table.is_empty() {
                fs::write(dir.join(format!("{stem}.txt")), &outcome.table)?;
                stdout.write_all(outcome.table.as_bytes())?;
            }
        }
        None => {
            let main_csv = outcome.csv.iter().find(|(s, _)| s.is_empty());
            match main_csv {
                Some((_, body)) if outcome.csv_primary => stdout.write_all(body.as_bytes())?,
                _ => stdout.write_all(json.as_bytes())?,
            }
        }
    }
    Ok(())
}

/// Left-aligned first column, right-aligned rest.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{cell:<w$}");
            } else {
                let _ = write!(out, "  {cell:>w$}");
            }
        }
        out.push('\n');
    };
    line(header.to_vec(), &mut out);
    for row in rows {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

pub fn fmt(x: f64) -> String {
    format!("{x:.6e}")
}
