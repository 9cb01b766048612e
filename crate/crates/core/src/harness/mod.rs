//! Verification suites over generated environment families, and their reports.

pub mod gen;
mod report;
mod suites;

pub use suites::{epsilon_of_delta, family, family_pay, SCALES};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use report::{emit_report, parse_csv_records, parse_json_report, render_report, ReportFormat, CSV_HEADER};

use crate::env::EnvironmentSpec;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SuiteId {
    /// Completing-step rows of `ū P` equal the rows of `P`.
    PropSeqProcess,
    /// The augmented sequentialized process of an MDP is an MDP.
    ThmMarkov,
    /// `max_x ū Q*(τ, x) = λ^{d−1} max_𝐱 ū Q*(τ 𝐱_{<d}, 𝐱_d)`.
    PropQmax,
    /// `ū Q*(τ 𝐱_{<i}, 𝐱ᵢ) = γ^{(d−i)/d} max_{a ∈ 𝒜(𝐱_{≤i})} Q*(h, a)`.
    LemmaQstar,
    /// `ū Q^{ūΠ}(τ 𝐱_{<d}, 𝐱_d) = Q^{Π̄}(h, D(𝐱))`.
    LemmaQpi,
    /// `ū V^{ūΠ}(τ) = λ^{d−1} V^{Π̄}(h)` and `ū V*(τ) = λ^{d−1} V*(h)`.
    EqVv,
    /// A `λ^{d−1}ε`-optimal sequentialized policy lifts to an `ε`-optimal one.
    ThmUplift,
    /// Exact bound values and the `1 − λ` certificate.
    BoundsArith,
    /// Occupied-cell counts against the bounds and across the action-scaling family.
    EsaCensus,
    /// Loss of the lifted surrogate-optimal policy.
    EsaEndtoend,
}

impl SuiteId {
    pub const ALL: [SuiteId; 10] = [
        SuiteId::PropSeqProcess,
        SuiteId::ThmMarkov,
        SuiteId::PropQmax,
        SuiteId::LemmaQstar,
        SuiteId::LemmaQpi,
        SuiteId::EqVv,
        SuiteId::ThmUplift,
        SuiteId::BoundsArith,
        SuiteId::EsaCensus,
        SuiteId::EsaEndtoend,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteId::PropSeqProcess => "prop-seq-process",
            SuiteId::ThmMarkov => "thm-markov",
            SuiteId::PropQmax => "prop-qmax",
            SuiteId::LemmaQstar => "lemma-qstar",
            SuiteId::LemmaQpi => "lemma-qpi",
            SuiteId::EqVv => "eq-vv",
            SuiteId::ThmUplift => "thm-uplift",
            SuiteId::BoundsArith => "bounds-arith",
            SuiteId::EsaCensus => "esa-census",
            SuiteId::EsaEndtoend => "esa-endtoend",
        }
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidParam(format!("unknown suite {s:?}")))
    }
}

/// Where a suite's environments come from.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvSource {
    /// `count` seeded random environments with sizes drawn up to the given maxima.
    Random {
        count: usize,
        max_obs: usize,
        max_rewards: usize,
        actions: Vec<usize>,
        max_context: usize,
        sparsity: f64,
    },
    /// One fixed environment.
    Spec(Box<EnvironmentSpec>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub suite: SuiteId,
    pub source: EnvSource,
    pub seed: u64,
    pub gamma: f64,
    pub epsilon: f64,
    /// Grid width for the census suite.
    pub delta: f64,
    /// Run value suites in exact arithmetic where `λ` is rational.
    pub exact: bool,
    /// History depth for enumeration-based checks.
    pub depth: usize,
    /// Requested truncation tolerance for value comparisons.
    pub tol: f64,
    /// Random stochastic policies per environment (policy suites).
    pub policies: usize,
}

impl SuiteConfig {
    /// Default sizes and parameters for each suite.
    pub fn defaults(suite: SuiteId, seed: u64) -> Self {
        let random = |count: usize, actions: Vec<usize>, max_context: usize| EnvSource::Random {
            count,
            max_obs: 3,
            max_rewards: 3,
            actions,
            max_context,
            sparsity: 0.3,
        };
        let (source, epsilon) = match suite {
            SuiteId::PropSeqProcess => (random(50, vec![2, 4, 8], 1), 0.2),
            SuiteId::ThmMarkov => (random(20, vec![2, 4, 8], 0), 0.2),
            SuiteId::PropQmax | SuiteId::LemmaQstar | SuiteId::LemmaQpi | SuiteId::EqVv => {
                (random(30, vec![2, 4, 8], 1), 0.2)
            }
            SuiteId::ThmUplift => (random(10, vec![2, 4, 8], 1), 0.2),
            SuiteId::BoundsArith => (random(0, vec![2], 0), 0.1),
            SuiteId::EsaCensus => (random(10, vec![2, 4, 8], 1), 0.2),
            SuiteId::EsaEndtoend => (random(5, vec![2, 4, 8], 1), 0.3),
        };
        Self {
            suite,
            source,
            seed,
            gamma: 0.5,
            epsilon,
            delta: 0.3,
            exact: false,
            depth: 2,
            tol: 1e-6,
            policies: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skip => "skip",
        })
    }
}

/// One check on one environment, holding its worst case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub suite: String,
    pub env_id: String,
    pub check_id: String,
    pub lhs: String,
    pub rhs: String,
    pub abs_diff: f64,
    pub tol: f64,
    pub pass: Status,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub records: Vec<CheckRecord>,
    pub notes: Vec<String>,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

impl VerificationReport {
    pub fn push(&mut self, record: CheckRecord) {
        match record.pass {
            Status::Pass => self.passed += 1,
            Status::Fail => self.failed += 1,
            Status::Skip => self.skipped += 1,
        }
        self.records.push(record);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn merge(&mut self, other: VerificationReport) {
        for r in other.records {
            self.push(r);
        }
        self.notes.extend(other.notes);
    }

    /// A suite passes iff none of its records fails; skips do not count against it.
    pub fn ok(&self) -> bool {
        self.failed == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| r.pass == Status::Fail)
    }
}

/// Short content hash of a spec.
pub fn fingerprint(spec: &EnvironmentSpec) -> String {
    let digest = Sha256::digest(spec.to_json().as_bytes());
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

/// Runs one suite. Module errors become failed records rather than aborting the run.
pub fn run_suite(config: &SuiteConfig) -> VerificationReport {
    suites::run(config)
}

/// Every suite with its default configuration, in a fixed order.
pub fn run_all(seed: u64) -> VerificationReport {
    let mut report = VerificationReport::default();
    for id in SuiteId::ALL {
        report.merge(run_suite(&SuiteConfig::defaults(id, seed)));
    }
    report
}

#[cfg(test)]
mod tests;
