use std::fs;

use ptm_core::inequalities::random_ulc;
use ptm_core::measures::parse_measure;
use ptm_core::{rng, ProbabilityVector, UlcMeasure};
use serde::Serialize;

use crate::UsageError;

const DEFAULT_RANDOM_SUPPORT: usize = 10;
/// Keeps the random-target stream apart from the replication substreams.
const TARGET_STREAM: u64 = u64::MAX;

/// A target as given on the command line, before ULC validation.
#[derive(Debug, Clone)]
pub struct RawTarget {
    pub spec: String,
    pub horizon: f64,
    pub pv: ProbabilityVector,
}

#[derive(Debug, Clone, Serialize)]
pub struct TargetInfo {
    pub spec: String,
    pub serialized: String,
}

fn num<T: std::str::FromStr>(words: &[String], i: usize, what: &str) -> Result<T, UsageError>
where
    T::Err: std::fmt::Display,
{
    let w = words.get(i).ok_or_else(|| UsageError(format!("target: missing {what}")))?;
    w.parse().map_err(|e| UsageError(format!("target: {what} `{w}`: {e}")))
}

fn opt_horizon(words: &[String], i: usize) -> Result<f64, UsageError> {
    if words.len() > i {
        num(words, i, "T")
    } else {
        Ok(1.0)
    }
}

fn check_arity(words: &[String], max: usize) -> Result<(), UsageError> {
    if words.len() > max {
        return Err(UsageError(format!("target: unexpected `{}`", words[max])));
    }
    Ok(())
}

fn measure(r: ptm_core::Result<UlcMeasure>) -> Result<UlcMeasure, UsageError> {
    r.map_err(|e| UsageError(format!("target: {e}")))
}

pub fn parse(words: &[String], seed: u64) -> Result<RawTarget, UsageError> {
    let kind = words.first().ok_or_else(|| UsageError("target: empty specification".into()))?;
    let spec = words.join(" ");
    let from = |mu: UlcMeasure| RawTarget { spec: spec.clone(), horizon: mu.horizon(), pv: mu.pv().clone() };
    match kind.as_str() {
        "poisson" => {
            check_arity(words, 2)?;
            Ok(from(measure(UlcMeasure::poisson(num(words, 1, "T")?))?))
        }
        "binomial" => {
            check_arity(words, 4)?;
            Ok(from(measure(UlcMeasure::binomial(num(words, 1, "n")?, num(words, 2, "p")?, opt_horizon(words, 3)?))?))
        }
        "bernoulli" => {
            check_arity(words, 3)?;
            Ok(from(measure(UlcMeasure::bernoulli(num(words, 1, "p")?, opt_horizon(words, 2)?))?))
        }
        "random" => {
            check_arity(words, 2)?;
            let max = if words.len() > 1 { num(words, 1, "max_support")? } else { DEFAULT_RANDOM_SUPPORT };
            if max == 0 {
                return Err(UsageError("target: max_support must be at least 1".into()));
            }
            Ok(from(random_ulc(&mut rng::substream(seed, TARGET_STREAM), max)))
        }
        "file" => {
            check_arity(words, 2)?;
            let path = words.get(1).ok_or_else(|| UsageError("target: missing path".into()))?;
            let text = fs::read_to_string(path).map_err(|e| UsageError(format!("target: {path}: {e}")))?;
            let (horizon, pv) = parse_measure(&text).map_err(|e| UsageError(format!("target: {path}: {e}")))?;
            Ok(RawTarget { spec, horizon, pv })
        }
        "inline" => {
            let horizon = num(words, 1, "T")?;
            let weights = (2..words.len()).map(|i| num(words, i, "weight")).collect::<Result<Vec<f64>, _>>()?;
            if weights.is_empty() {
                return Err(UsageError("target: inline needs at least one weight".into()));
            }
            let pv = ProbabilityVector::from_unnormalized(weights).map_err(|e| UsageError(format!("target: {e}")))?;
            Ok(RawTarget { spec, horizon, pv })
        }
        other => Err(UsageError(format!("target: unknown kind `{other}`"))),
    }
}

impl RawTarget {
    /// Validates the weights as a ULC measure.
    pub fn ulc(&self) -> Result<UlcMeasure, UsageError> {
        measure(UlcMeasure::from_pv(self.pv.clone(), self.horizon))
    }

    pub fn info(&self) -> TargetInfo {
        let serialized = match self.ulc() {
            Ok(mu) => mu.to_text(),
            Err(_) => {
                let mut s = format!("T={:?}\n", self.horizon);
                for (k, w) in self.pv.weights().iter().enumerate() {
                    s.push_str(&format!("{k} {w:.17e}\n"));
                }
                s
            }
        };
        TargetInfo { spec: self.spec.clone(), serialized }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn named_families() {
        let t = parse(&words("binomial 3 0.5"), 0).unwrap();
        assert_eq!(t.pv.len(), 4);
        assert_eq!(t.horizon, 1.0);
        assert_eq!(parse(&words("bernoulli 0.5 2"), 0).unwrap().horizon, 2.0);
        assert!(parse(&words("poisson 1"), 0).unwrap().ulc().is_ok());
    }

    #[test]
    fn random_depends_on_seed_only() {
        let a = parse(&words("random 6"), 5).unwrap();
        let b = parse(&words("random 6"), 5).unwrap();
        assert_eq!(a.pv, b.pv);
    }

    #[test]
    fn inline_may_be_non_ulc() {
        let t = parse(&words("inline 1 0.1 0.1 0.8"), 0).unwrap();
        assert!(t.ulc().is_err());
    }

    #[test]
    fn malformed_specs_are_usage_errors() {
        for s in ["", "binomial 3", "binomial x 0.5", "poisson 1 2", "wat 1", "inline 1", "random 0", "bernoulli 2"] {
            assert!(parse(&words(s), 0).is_err(), "{s}");
        }
    }
}
