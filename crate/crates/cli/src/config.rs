use std::fs;
use std::path::{Path, PathBuf};

use crate::args::GlobalArgs;
use crate::UsageError;

const KEYS: [&str; 7] = ["seed", "n", "target", "out", "threads", "tol-rel", "grid"];

/// Fills unset flags from a flat `key=value` file. `#` starts a comment.
pub fn apply_file(args: &mut GlobalArgs, path: &Path) -> Result<(), UsageError> {
    let text =
        fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    apply_text(args, &text)
}

pub fn apply_text(args: &mut GlobalArgs, text: &str) -> Result<(), UsageError> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| UsageError(format!("config line {}: expected key=value", i + 1)))?;
        if !KEYS.contains(&key) {
            return Err(UsageError(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        let bad = |e: &dyn std::fmt::Display| UsageError(format!("config line {}: {key}: {e}", i + 1));
        match key {
            "seed" if args.seed.is_none() => args.seed = Some(value.parse().map_err(|e| bad(&e))?),
            "n" if args.n.is_none() => args.n = Some(value.parse().map_err(|e| bad(&e))?),
            "threads" if args.threads.is_none() => args.threads = Some(value.parse().map_err(|e| bad(&e))?),
            "grid" if args.grid.is_none() => args.grid = Some(value.parse().map_err(|e| bad(&e))?),
            "tol-rel" if args.tol_rel.is_none() => args.tol_rel = Some(value.parse().map_err(|e| bad(&e))?),
            "out" if args.out.is_none() => args.out = Some(PathBuf::from(value)),
            "target" if args.target.is_none() => {
                args.target = Some(value.split_whitespace().map(str::to_string).collect())
            }
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let mut args = GlobalArgs { seed: Some(1), ..Default::default() };
        apply_text(&mut args, "seed = 9\nn=50 # comment\ntarget = binomial 3 0.5\n\n").unwrap();
        assert_eq!(args.seed, Some(1));
        assert_eq!(args.n, Some(50));
        assert_eq!(args.target.unwrap(), ["binomial", "3", "0.5"]);
    }

    #[test]
    fn unknown_keys_and_garbage_are_rejected() {
        let mut args = GlobalArgs::default();
        assert!(apply_text(&mut args, "sede=3").is_err());
        assert!(apply_text(&mut args, "seed 3").is_err());
        assert!(apply_text(&mut args, "n=abc").is_err());
    }
}
