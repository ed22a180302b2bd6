use serde::Serialize;

use super::{AdversaryError, AdversarySchedule};
use crate::dist::{truncate, Law, WeightSchedule};
use crate::numeric::{quartic_tail_bound, ser_f64, zeta2_tail, NeumaierSum};
use crate::teststat::{evaluate, Evaluator, ExpectationReport, TestFamily};

/// Explicit terms summed by [`tail_union_bound`] before the k⁻⁴ remainder.
const UNION_TERMS: u64 = 1 << 18;

/// Allowance for rounding when comparing a measured value with its bound.
const VERIFY_PAD: f64 = 1e-12;

/// The union-bound term φ(ψ(n))·Σ_{k≥n} 1/φ(ψ(k))² and its coarse
/// majorant Σ_{k≥n} k⁻².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailUnionBound {
    /// Upper bound on the term (summation remainder included).
    #[serde(serialize_with = "ser_f64")]
    pub term: f64,
    /// Width of the remainder already included in `term`.
    #[serde(serialize_with = "ser_f64")]
    pub error: f64,
    #[serde(serialize_with = "ser_f64")]
    pub coarse: f64,
}

/// Bounds the probability that one of φ(ψ(n)) draws lands at or above n,
/// up to the normalizer of the law.
///
/// Past the explicit window the remainder uses 1/φ(ψ(k))² ≤ k⁻⁴, valid
/// because φ(m) ≥ m and ψ(k) > k² for k ≥ 2.
pub fn tail_union_bound(n: u64, schedule: &WeightSchedule) -> TailUnionBound {
    assert!(n >= 1, "tail_union_bound needs n >= 1");
    let end = n.saturating_add(UNION_TERMS);
    let sum: NeumaierSum = (n..end).map(|k| schedule.inv_weight_sq(k)).collect();
    let prefactor = schedule.weight(n);
    let error = prefactor * quartic_tail_bound(end.max(2));
    TailUnionBound { term: prefactor * sum.value() + error, error, coarse: zeta2_tail(n) }
}

/// One verified rank of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankBound {
    pub n: u64,
    pub psi: u64,
    /// 𝔼_{μ₂}[A_{ψ(n)}] on the final law.
    pub measured: ExpectationReport,
    /// 𝔼_{μ₂ⁿ}[A_{ψ(n)}] on the law restricted to {0, …, n−1}.
    pub finite_part: ExpectationReport,
    /// α + 1/n.
    #[serde(serialize_with = "ser_f64")]
    pub term_level: f64,
    /// φ(ψ(n))·Σ_{k≥n} 1/φ(ψ(k))².
    #[serde(serialize_with = "ser_f64")]
    pub term_tail: f64,
    /// P_{μ₂}[some draw ≥ n] ≤ c·term_tail, clamped to 1.
    #[serde(serialize_with = "ser_f64")]
    pub tail_probability: f64,
    /// Σ_{k≥n} k⁻².
    #[serde(serialize_with = "ser_f64")]
    pub coarse_tail: f64,
    /// min(1, α + 1/n + Σ_{k≥n} k⁻²).
    #[serde(serialize_with = "ser_f64")]
    pub total: f64,
    pub pass: bool,
}

/// Recomputes every rank of a schedule against the three-term bound.
///
/// Fails with [`AdversaryError::VerificationFailure`] (carrying all rows) at
/// the first rank whose measured value exceeds its total beyond the
/// evaluator's error.
pub fn verify_adversary(
    schedule: &AdversarySchedule,
    test: &TestFamily,
    evaluator: &Evaluator,
) -> Result<Vec<RankBound>, AdversaryError> {
    schedule.check_structure()?;
    let weights = schedule.final_law.schedule();
    if *weights.phi() != test.phi() {
        return Err(AdversaryError::InvalidParameter("test sample-size map differs from the schedule's".into()));
    }
    let final_law = Law::Tail(schedule.final_law.clone());
    let c_upper = schedule.final_law.c() + schedule.final_law.c_error();
    let alpha = schedule.alpha;

    let mut rows = Vec::with_capacity(schedule.ranks.len());
    let mut first_failure = None;
    for rec in &schedule.ranks {
        let (n, m) = (rec.n, rec.psi);
        let measured = evaluate(test, &final_law, m, evaluator)?;
        let finite_part = evaluate(test, &Law::Finite(truncate(&schedule.final_law, n)?), m, evaluator)?;
        let tub = tail_union_bound(n, weights);
        let term_level = alpha + 1.0 / n as f64;
        let total = (term_level + tub.coarse).min(1.0);
        let pass = measured.value <= total + measured.half_width + VERIFY_PAD;
        if !pass && first_failure.is_none() {
            first_failure = Some(n);
        }
        rows.push(RankBound {
            n,
            psi: m,
            measured,
            finite_part,
            term_level,
            term_tail: tub.term,
            tail_probability: (c_upper * tub.term).min(1.0),
            coarse_tail: tub.coarse,
            total,
            pass,
        });
    }
    match first_failure {
        Some(rank) => Err(AdversaryError::VerificationFailure { rank, rows }),
        None => Ok(rows),
    }
}
