//! Validation reports shared by the fusion, model and state checks.

use serde::{Deserialize, Serialize};

/// Violations listed per check are capped; the count keeps the true total.
const MAX_LISTED: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub worst_residual: f64,
    pub violation_count: usize,
    pub violations: Vec<String>,
}

impl Check {
    pub fn new(name: &str) -> Self {
        Check {
            name: name.to_string(),
            passed: true,
            worst_residual: 0.0,
            violation_count: 0,
            violations: Vec::new(),
        }
    }

    /// Records a residual; values above `tol` count as violations described by `what`.
    pub fn residual(&mut self, value: f64, tol: f64, what: impl FnOnce() -> String) {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        if value > self.worst_residual {
            self.worst_residual = value;
        }
        if value > tol {
            self.fail(what());
        }
    }

    pub fn fail(&mut self, msg: String) {
        self.passed = false;
        self.violation_count += 1;
        if self.violations.len() < MAX_LISTED {
            self.violations.push(msg);
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn worst_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.worst_residual).fold(0.0, f64::max)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            writeln!(f, "{mark} {:<34} worst residual {:.3e}", c.name, c.worst_residual)?;
            for v in &c.violations {
                writeln!(f, "       - {v}")?;
            }
            if c.violation_count > c.violations.len() {
                writeln!(f, "       ... {} more", c.violation_count - c.violations.len())?;
            }
        }
        Ok(())
    }
}
