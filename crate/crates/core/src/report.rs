//! Report types shared by the verifiers.

use serde::{Deserialize, Serialize};

/// Default relative slack for inequality verification.
pub const DEFAULT_REL_TOL: f64 = 1e-12;

/// Outcome of one verified inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub constant_used: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    /// Absolute tolerance the slack was judged against.
    pub tolerance: f64,
    pub passed: bool,
    /// Report-only entries (conjectural constants) never count as failures.
    pub asserted: bool,
    pub diagnostics: Vec<(String, f64)>,
}

impl InequalityReport {
    /// Builds a report judged at relative tolerance `rel_tol·max(|lhs|, |rhs|, 1)`.
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, constant_used: f64, rel_tol: f64) -> Self {
        let tolerance = rel_tol * lhs.abs().max(rhs.abs()).max(1.0);
        let slack = rhs - lhs;
        InequalityReport {
            name: name.into(),
            lhs,
            rhs,
            constant_used,
            slack,
            tolerance,
            passed: slack >= -tolerance,
            asserted: true,
            diagnostics: Vec::new(),
        }
    }

    pub fn report_only(mut self) -> Self {
        self.asserted = false;
        self
    }

    pub fn with_diagnostic(mut self, label: impl Into<String>, value: f64) -> Self {
        self.diagnostics.push((label.into(), value));
        self
    }

    /// True when this report is asserted and failed.
    pub fn is_violation(&self) -> bool {
        self.asserted && !self.passed
    }
}

/// Pass/fail outcome of a structural check over an indexed sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    /// Smallest index at which the property fails.
    pub first_violation: Option<usize>,
    pub violations: usize,
    /// Most negative margin observed (`≥ 0` means every instance held).
    pub worst_margin: f64,
    pub checked: usize,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            passed: true,
            first_violation: None,
            violations: 0,
            worst_margin: f64::INFINITY,
            checked: 0,
        }
    }

    /// Records one check at `index` with `margin` judged against `tol`.
    pub fn record(&mut self, index: usize, margin: f64, tol: f64) {
        self.checked += 1;
        self.worst_margin = self.worst_margin.min(margin);
        if margin < -tol {
            self.violations += 1;
            self.passed = false;
            if self.first_violation.is_none() {
                self.first_violation = Some(index);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passed_iff_slack_within_tolerance() {
        let r = InequalityReport::new("x", 1.0, 1.0 - 5e-13, 1.0, 1e-12);
        assert!(r.passed);
        let r = InequalityReport::new("x", 1.0, 1.0 - 5e-12, 1.0, 1e-12);
        assert!(!r.passed);
        assert!(r.is_violation());
        assert!(!r.report_only().is_violation());
    }

    #[test]
    fn check_report_tracks_first_violation() {
        let mut c = CheckReport::new("c");
        c.record(0, 1.0, 0.0);
        c.record(3, -1.0, 0.0);
        c.record(5, -2.0, 0.0);
        assert!(!c.passed);
        assert_eq!(c.first_violation, Some(3));
        assert_eq!(c.violations, 2);
        assert_eq!(c.worst_margin, -2.0);
    }
}
