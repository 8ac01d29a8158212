//! Plain-text measure format: a `T=<real>` line followed by `<k> <weight>` lines.

use std::fmt::Write;

use super::{ProbabilityVector, UlcMeasure};
use crate::error::{Error, Result};

pub fn write_measure(mu: &UlcMeasure) -> String {
    let mut out = String::new();
    writeln!(out, "T={:?}", mu.horizon()).unwrap();
    for (k, w) in mu.pv().weights().iter().enumerate() {
        writeln!(out, "{k} {w:.17e}").unwrap();
    }
    out
}

/// Parses the horizon and weights. Blank lines and `#` comments are ignored;
/// indices must be increasing and missing indices carry zero weight.
pub fn parse_measure(text: &str) -> Result<(f64, ProbabilityVector)> {
    let mut horizon = None;
    let mut weights: Vec<f64> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| Error::Parse { line: line_no, msg: msg.to_string() };
        if horizon.is_none() {
            let value = line.strip_prefix("T=").ok_or_else(|| err("expected `T=<real>`"))?;
            horizon = Some(value.trim().parse::<f64>().map_err(|e| err(&e.to_string()))?);
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(k), Some(w), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err("expected `<k> <weight>`"));
        };
        let k: usize = k.parse().map_err(|e: std::num::ParseIntError| err(&e.to_string()))?;
        let w: f64 = w.parse().map_err(|e: std::num::ParseFloatError| err(&e.to_string()))?;
        if k < weights.len() {
            return Err(err("indices must be strictly increasing"));
        }
        weights.resize(k, 0.0);
        weights.push(w);
    }
    let horizon = horizon.ok_or(Error::Parse { line: 0, msg: "missing `T=` line".into() })?;
    Ok((horizon, ProbabilityVector::new(weights)?))
}

impl UlcMeasure {
    pub fn from_text(text: &str) -> Result<Self> {
        let (horizon, pv) = parse_measure(text)?;
        UlcMeasure::from_pv(pv, horizon)
    }

    pub fn to_text(&self) -> String {
        write_measure(self)
    }
}
