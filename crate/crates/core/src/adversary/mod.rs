//! Construction of an infinite-support law that defeats a test family of
//! pointwise level α under finite-support laws, with per-rank certificates,
//! the matching verification pass and the duality reduction.

mod analytic;
mod build;
mod verify;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistError, FinitePmf, TailPmf};
use crate::numeric::ser_f64;
use crate::teststat::{Evaluator, TestError, TestSpec};

pub use build::{build_adversary, part_two, PartTwoOutcome};
pub use verify::{tail_union_bound, verify_adversary, RankBound, TailUnionBound};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    /// No admissible ψ(n): the test exceeds α + 1/n on a finite law. This is a
    /// finding about the test, not a failure of the construction.
    #[error("level violation at rank {rank}: E[A_{m}] = {value} exceeds {bound}")]
    LevelViolation { rank: u64, m: u64, value: f64, bound: f64, law: FinitePmf },
    #[error("verification failed at rank {rank}")]
    VerificationFailure { rank: u64, rows: Vec<RankBound> },
    #[error("search budget exhausted at rank {rank} after {evaluations} evaluations")]
    BudgetExhausted { rank: u64, evaluations: u64 },
    #[error("integer overflow while choosing psi at rank {0}")]
    Overflow(u64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Test(#[from] TestError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// How "for all m ≥ ψ(n)" is established.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum HorizonPolicy {
    /// Closed-form control of every m ≥ ψ(n); built-in families only.
    #[default]
    Analytic,
    /// Check m ∈ [ψ(n), multiplier·ψ(n)] with the chosen evaluator. The
    /// result is a heuristic witness, not a proof.
    FiniteHorizon {
        multiplier: u64,
        #[serde(default = "default_max_evaluations")]
        max_evaluations: u64,
    },
}

fn default_max_evaluations() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertMethod {
    Exact,
    BruteForce,
    MonteCarlo {
        #[serde(serialize_with = "ser_f64")]
        conf: f64,
    },
}

impl From<&Evaluator> for CertMethod {
    fn from(e: &Evaluator) -> Self {
        match *e {
            Evaluator::Exact { .. } => CertMethod::Exact,
            Evaluator::BruteForce => CertMethod::BruteForce,
            Evaluator::MonteCarlo { conf, .. } => CertMethod::MonteCarlo { conf },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertStatus {
    Certified,
    HeuristicWitness,
}

/// Finite witness that 𝔼_{μ₂ⁿ}[A_m] ≤ α + 1/n on the checked range of m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelCertificate {
    pub rank: u64,
    /// `[ψ(n), M]`; `M = null` means every m ≥ ψ(n) is covered.
    pub checked_m_range: (u64, Option<u64>),
    /// Upper bound on 𝔼_{μ₂ⁿ}[A_m] over the range, slack included.
    #[serde(serialize_with = "ser_f64")]
    pub max_expectation: f64,
    #[serde(serialize_with = "ser_f64")]
    pub bound: f64,
    pub method: CertMethod,
    pub analytic: bool,
    /// Numerical or statistical allowance already added to `max_expectation`.
    #[serde(serialize_with = "ser_f64")]
    pub slack: f64,
    pub status: CertStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankRecord {
    pub n: u64,
    pub psi: u64,
    /// Normalizer of μ₂ⁿ.
    #[serde(serialize_with = "ser_f64")]
    pub c_n: f64,
    pub certificate: LevelCertificate,
}

/// The built schedule ψ, per-rank certificates and the final law μ₂.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySchedule {
    #[serde(serialize_with = "ser_f64")]
    pub alpha: f64,
    pub ranks: Vec<RankRecord>,
    pub final_law: TailPmf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<TestSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl AdversarySchedule {
    /// ψ(0), ψ(1), …, ψ(N).
    pub fn psi(&self) -> &[u64] {
        self.final_law.schedule().psi_table()
    }

    /// Structural checks: ranks numbered 1..N, rank 1 is the Dirac law with
    /// ψ(0) = ψ(1) = 1, ψ strictly increasing past rank 1 with ψ(n) > n²,
    /// and the final law's table matches the ranks.
    pub fn check_structure(&self) -> Result<(), AdversaryError> {
        let bad = |m: String| Err(AdversaryError::InvalidParameter(m));
        if self.ranks.is_empty() {
            return bad("schedule has no ranks".into());
        }
        let psi = self.psi();
        if psi.len() != self.ranks.len() + 1 || psi[0] != 1 {
            return bad("final law table does not match the ranks".into());
        }
        for (i, r) in self.ranks.iter().enumerate() {
            let n = i as u64 + 1;
            if r.n != n || r.certificate.rank != n || psi[i + 1] != r.psi {
                return bad(format!("rank record {i} is out of order or disagrees with the law"));
            }
            if n == 1 && r.psi != 1 {
                return bad("rank 1 must have psi = 1".into());
            }
            if n >= 2 && (r.psi <= psi[i] || r.psi <= n * n) {
                return bad(format!("psi({n}) = {} violates growth", r.psi));
            }
        }
        Ok(())
    }
}
