//! Test functionals Aₙ and three interchangeable ways of computing
//! 𝔼_μ[Aₙ(X₁,…,X_{φ(n)})]: closed form, brute-force enumeration and seeded
//! Monte Carlo.

mod brute;
mod exact;
mod family;
mod mc;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistError, IntegerLaw, Law};

pub use brute::{brute_force_expectation, BRUTE_FORCE_LIMIT};
pub use exact::{exact_expectation, exact_split_max_expectation, max_pmf};
pub use family::{
    bounded_support_statistic, dualize, dualize_for_part_two, split_max_statistic, Functional, Hypothesis,
    LevelClaim, TestFamily, TestSpec,
};
pub(crate) use family::TestKind;
pub use mc::mc_expectation;
pub use report::{ErrorKind, ExpectationReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TestError {
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("enumeration of {0} tuples exceeds the brute-force budget")]
    TooLarge(f64),
    #[error("no closed-form evaluator for test {0}")]
    NoClosedForm(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Which evaluator computes an expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Evaluator {
    Exact {
        #[serde(default = "default_tol")]
        tol: f64,
    },
    BruteForce,
    MonteCarlo {
        reps: u64,
        conf: f64,
        #[serde(default)]
        seed: u64,
    },
}

fn default_tol() -> f64 {
    1e-12
}

impl Default for Evaluator {
    fn default() -> Self {
        Evaluator::Exact { tol: default_tol() }
    }
}

/// Evaluates 𝔼_law[Aₙ] with the chosen method.
pub fn evaluate(test: &TestFamily, law: &Law, n: u64, evaluator: &Evaluator) -> Result<ExpectationReport, TestError> {
    match *evaluator {
        Evaluator::Exact { tol } => exact_expectation(test, law, n, tol),
        Evaluator::BruteForce => match law.as_finite() {
            Some(f) => brute_force_expectation(test, f, n),
            None => Err(TestError::InvalidParameter("brute force needs a finitely supported law".into())),
        },
        Evaluator::MonteCarlo { reps, conf, seed } => mc_expectation(test, law, n, reps, conf, seed),
    }
}
