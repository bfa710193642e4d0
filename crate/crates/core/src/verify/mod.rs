//! Statistical tests, quadrature and the verification suites.

pub mod ks;
pub mod quadrature;
pub mod stats;
pub mod suites;

use serde::{Deserialize, Serialize};

/// How a check is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    /// Pass when the value (a p-value) exceeds the threshold.
    PValueAbove,
    /// Pass when the value (a residual or z-score) is below the threshold.
    ResidualBelow,
    /// Pass when the value (a z-score) exceeds the threshold; used for power checks.
    StatisticAbove,
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub decision: Decision,
    /// Raw test statistic (KS distance, correlation, estimate, ...).
    pub statistic: f64,
    /// The p-value or residual compared with `threshold`.
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub samples: usize,
    pub seed: u64,
}

impl TestReport {
    pub fn p_value(name: impl Into<String>, statistic: f64, p: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            decision: Decision::PValueAbove,
            statistic,
            value: p,
            threshold,
            pass: p > threshold,
            samples: 0,
            seed: 0,
        }
    }

    pub fn residual(name: impl Into<String>, statistic: f64, residual: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            decision: Decision::ResidualBelow,
            statistic,
            value: residual,
            threshold,
            // NaN residuals fail.
            pass: residual < threshold,
            samples: 0,
            seed: 0,
        }
    }

    pub fn power(name: impl Into<String>, statistic: f64, z: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            decision: Decision::StatisticAbove,
            statistic,
            value: z,
            threshold,
            pass: z > threshold,
            samples: 0,
            seed: 0,
        }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `name  statistic  value <op> threshold  PASS|FAIL`.
    pub fn line(&self) -> String {
        let op = match self.decision {
            Decision::PValueAbove => "p >",
            Decision::ResidualBelow => "r <",
            Decision::StatisticAbove => "z >",
        };
        format!(
            "{:<48} stat={:<12.6e} {} {:.3e} (value {:.3e})  {}",
            self.name,
            self.statistic,
            op,
            self.threshold,
            self.value,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Reports of one suite; it passes iff every check passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub pass: bool,
    pub elapsed_secs: f64,
    pub checks: Vec<TestReport>,
}

impl SuiteReport {
    pub fn new(suite: impl Into<String>, seed: u64, checks: Vec<TestReport>, elapsed_secs: f64) -> Self {
        Self {
            suite: suite.into(),
            seed,
            pass: !checks.is_empty() && checks.iter().all(|c| c.pass),
            elapsed_secs,
            checks,
        }
    }

    pub fn summary_line(&self) -> String {
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        format!(
            "[{}] {:<16} {} checks, {} failed, {:.1}s",
            if self.pass { "PASS" } else { "FAIL" },
            self.suite,
            self.checks.len(),
            failed,
            self.elapsed_secs
        )
    }
}

/// Bonferroni-corrected per-test level for `tests` p-value checks.
pub fn bonferroni(alpha: f64, tests: usize) -> f64 {
    alpha / tests.max(1) as f64
}
