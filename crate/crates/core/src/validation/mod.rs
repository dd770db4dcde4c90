//! Reproduction checks: tabulated moments, simulation cross-validation,
//! structural properties of the solver and small closed-form instances.
//!
//! Each criterion returns a [`CriterionReport`] listing every comparison it
//! made, with expected and actual values, the tolerance, and wall time.

mod criteria;
pub mod discretize;

use std::time::{Duration, Instant};

use serde::Serialize;

pub use criteria::run_criterion;

/// How a check compares `actual` against `expected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|actual − expected| ≤ tolerance`.
    Within,
    /// `actual < expected`.
    Below,
    /// `actual ≤ expected`.
    AtMost,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub label: String,
    pub relation: Relation,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub seconds: f64,
    /// Reason this check is known not to hold as stated; a failing check
    /// with a deviation note marks its criterion blocked instead of failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<String>,
}

impl CheckOutcome {
    pub fn within(label: impl Into<String>, expected: f64, actual: f64, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            relation: Relation::Within,
            expected,
            actual,
            tolerance,
            passed: (actual - expected).abs() <= tolerance,
            seconds: 0.0,
            deviation: None,
        }
    }

    /// Passes when `actual ≤ bound`; reported as a distance from zero.
    pub fn bounded(label: impl Into<String>, actual: f64, bound: f64) -> Self {
        Self::within(label, 0.0, actual, bound)
    }

    pub fn below(label: impl Into<String>, actual: f64, expected: f64) -> Self {
        Self {
            label: label.into(),
            relation: Relation::Below,
            expected,
            actual,
            tolerance: 0.0,
            passed: actual < expected,
            seconds: 0.0,
            deviation: None,
        }
    }

    pub fn at_most(label: impl Into<String>, actual: f64, expected: f64) -> Self {
        Self {
            label: label.into(),
            relation: Relation::AtMost,
            expected,
            actual,
            tolerance: 0.0,
            passed: actual <= expected,
            seconds: 0.0,
            deviation: None,
        }
    }

    pub fn timed(mut self, elapsed: Duration) -> Self {
        self.seconds = elapsed.as_secs_f64();
        self
    }

    pub fn with_deviation(mut self, note: impl Into<String>) -> Self {
        self.deviation = Some(note.into());
        self
    }

    pub fn describe(&self) -> String {
        let status = match (self.passed, &self.deviation) {
            (true, _) => "ok  ",
            (false, Some(_)) => "DEV ",
            (false, None) => "FAIL",
        };
        let relation = match self.relation {
            Relation::Within if self.expected == 0.0 => {
                format!("need {:.3e} <= {:.1e}", self.actual, self.tolerance)
            }
            Relation::Within => format!(
                "expected {:.6} ± {:.1e}, got {:.6}",
                self.expected, self.tolerance, self.actual
            ),
            Relation::Below => format!("need {:.6} < {:.6}", self.actual, self.expected),
            Relation::AtMost => format!("need {:.6} <= {:.6}", self.actual, self.expected),
        };
        let mut line = format!("{status} {} ({relation}) [{:.3}s]", self.label, self.seconds);
        if let (false, Some(note)) = (self.passed, &self.deviation) {
            line.push_str(&format!(" documented deviation: {note}"));
        }
        line
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: String,
    pub checks: Vec<CheckOutcome>,
    /// Failure that stopped the criterion before all checks ran.
    pub error: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    /// Every failing check carries a documented deviation.
    Blocked,
    Fail,
}

impl CriterionReport {
    pub fn status(&self) -> Status {
        if self.error.is_some() || self.checks.is_empty() {
            return Status::Fail;
        }
        let mut failing = self.checks.iter().filter(|c| !c.passed).peekable();
        if failing.peek().is_none() {
            Status::Pass
        } else if failing.all(|c| c.deviation.is_some()) {
            Status::Blocked
        } else {
            Status::Fail
        }
    }

    pub fn passed(&self) -> bool {
        self.status() == Status::Pass
    }

    /// One-line status.
    pub fn summary(&self) -> String {
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let status = match self.status() {
            Status::Pass => "PASS",
            Status::Blocked => "BLOCKED",
            Status::Fail => "FAIL",
        };
        let mut line = format!(
            "[{status}] criterion {}: {} ({} checks, {failed} failed, {:.2}s)",
            self.id,
            self.title,
            self.checks.len(),
            self.seconds
        );
        if let Some(e) = &self.error {
            line.push_str(&format!(" error: {e}"));
        }
        line
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    /// Retained cycles per simulation.
    pub cycles: usize,
    pub warmup: usize,
    pub seed: u64,
    /// Multiplies every numeric tolerance; values below 1 tighten the suite.
    pub tolerance_scale: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            cycles: crate::simulator::DEFAULT_CYCLES,
            warmup: crate::simulator::DEFAULT_WARMUP,
            seed: 20_200_415,
            tolerance_scale: 1.0,
        }
    }
}

pub const CRITERIA: &[(u32, &str)] = &[
    (1, "tabulated AoI moments"),
    (2, "simulation agreement, Poisson arrivals"),
    (3, "simulation agreement, PH arrivals"),
    (4, "PAoI insensitivity without preemption"),
    (5, "interior optimum and replacement policy"),
    (6, "solver structure"),
    (7, "small-instance oracles"),
    (8, "age violation curve"),
    (9, "parameter sweep spot checks"),
];

pub fn title(id: u32) -> Option<&'static str> {
    CRITERIA.iter().find(|(i, _)| *i == id).map(|(_, t)| *t)
}

pub fn run_all(opts: &ValidationOptions) -> Vec<CriterionReport> {
    CRITERIA.iter().map(|(id, _)| run_criterion(*id, opts)).collect()
}

pub(crate) fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}
