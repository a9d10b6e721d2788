//! Acceptance checks: Monte Carlo risk tables, rate trends, the adaptive
//! bandwidth, determinism of the CLI, and the matrix oracle suites.
//!
//! Every check returns a [`Check`] carrying the measured values, so a runner
//! can print one line per criterion.

use std::fmt;

pub mod oracles;
pub mod random;
pub mod tables;

/// Master seed shared by all Monte Carlo checks.
pub const SEED: u64 = 2024;

#[derive(Debug, Clone)]
pub struct Check {
    pub id: String,
    pub title: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(id: impl Into<String>, title: impl Into<String>) -> Self {
        Self { id: id.into(), title: title.into(), pass: true, detail: String::new() }
    }

    /// Records one measurement; any failing part fails the whole check.
    pub fn part(&mut self, ok: bool, text: impl AsRef<str>) -> &mut Self {
        self.pass &= ok;
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(text.as_ref());
        if !ok {
            self.detail.push_str(" [x]");
        }
        self
    }

    pub fn failed(id: impl Into<String>, title: impl Into<String>, err: impl fmt::Display) -> Self {
        let mut c = Self::new(id, title);
        c.part(false, format!("error: {err}"));
        c
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "criterion {}: {verdict} {} | {}", self.id, self.title, self.detail)
    }
}

/// `|value − target| ≤ rel·target`.
pub fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target
}

/// `"1.628 (target 1.64 ±10%)"`.
pub fn versus(label: &str, value: f64, target: f64, rel: f64) -> (bool, String) {
    (within(value, target, rel), format!("{label} {value:.3} (target {target} ±{:.0}%)", rel * 100.0))
}
