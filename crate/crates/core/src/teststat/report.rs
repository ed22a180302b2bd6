use serde::{Deserialize, Serialize};

use crate::numeric::ser_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Exact,
    Truncated,
    MonteCarlo,
}

/// An expectation with its error description. Serializes with the field
/// order `value, error_kind, half_width, confidence, evaluations`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationReport {
    #[serde(serialize_with = "ser_f64")]
    pub value: f64,
    pub error_kind: ErrorKind,
    #[serde(serialize_with = "ser_f64")]
    pub half_width: f64,
    #[serde(serialize_with = "ser_f64")]
    pub confidence: f64,
    pub evaluations: u64,
}

impl ExpectationReport {
    pub fn exact(value: f64, evaluations: u64) -> Self {
        Self { value: value.clamp(0.0, 1.0), error_kind: ErrorKind::Exact, half_width: 0.0, confidence: 1.0, evaluations }
    }

    pub fn truncated(value: f64, half_width: f64, evaluations: u64) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            error_kind: ErrorKind::Truncated,
            half_width,
            confidence: 1.0,
            evaluations,
        }
    }

    pub fn monte_carlo(value: f64, half_width: f64, confidence: f64, evaluations: u64) -> Self {
        Self { value: value.clamp(0.0, 1.0), error_kind: ErrorKind::MonteCarlo, half_width, confidence, evaluations }
    }

    /// Lower end of the interval, clamped to [0,1].
    pub fn lower(&self) -> f64 {
        (self.value - self.half_width).clamp(0.0, 1.0)
    }

    /// Upper end of the interval, clamped to [0,1].
    pub fn upper(&self) -> f64 {
        (self.value + self.half_width).clamp(0.0, 1.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower() <= x && x <= self.upper()
    }

    /// The report of 1 − A given the report of A.
    pub fn complement(&self) -> Self {
        Self { value: 1.0 - self.value, ..self.clone() }
    }
}
