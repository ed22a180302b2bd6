use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::analytic::{self, Outcome};
use super::{
    AdversaryError, AdversarySchedule, CertMethod, CertStatus, HorizonPolicy, LevelCertificate, RankRecord,
};
use crate::dist::{truncate_schedule, FinitePmf, GrowthRule, Law, TailPmf, WeightSchedule};
use crate::numeric::{derive_seed, hoeffding_one_sided, ser_f64};
use crate::teststat::{dualize_for_part_two, evaluate, Evaluator, TestFamily};

/// Builds ψ(0), …, ψ(num_ranks), the laws μ₂ⁿ and the final law μ₂.
///
/// Rank 1 is the Dirac law at 0 with ψ(0) = ψ(1) = 1. At rank n > 1, μ₂ⁿ has
/// mass ∝ 1/φ(ψ(k))² on {0, …, n−1} and ψ(n) is the smallest integer above
/// max(ψ(n−1), n²) for which 𝔼_{μ₂ⁿ}[A_m] ≤ α + 1/n on every m the horizon
/// policy covers. With [`HorizonPolicy::Analytic`] closed forms are used and
/// `evaluator` is ignored.
pub fn build_adversary(
    test: &TestFamily,
    alpha: f64,
    num_ranks: u64,
    horizon: HorizonPolicy,
    evaluator: Evaluator,
) -> Result<AdversarySchedule, AdversaryError> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(AdversaryError::InvalidParameter(format!("alpha {alpha} not in [0,1)")));
    }
    if num_ranks == 0 {
        return Err(AdversaryError::InvalidParameter("num_ranks must be >= 1".into()));
    }
    match horizon {
        HorizonPolicy::Analytic if !analytic::supports(test) => {
            return Err(AdversaryError::InvalidParameter(format!(
                "analytic horizon has no closed form for {}",
                test.name()
            )));
        }
        HorizonPolicy::FiniteHorizon { multiplier: 0, .. } => {
            return Err(AdversaryError::InvalidParameter("horizon multiplier must be >= 1".into()));
        }
        _ => {}
    }
    let phi = test.phi();
    let is_analytic = matches!(horizon, HorizonPolicy::Analytic);
    let method = if is_analytic { CertMethod::Exact } else { CertMethod::from(&evaluator) };
    let status = if is_analytic { CertStatus::Certified } else { CertStatus::HeuristicWitness };

    let mut psi: Vec<u64> = vec![1, 1];
    let rank_one = WeightSchedule::new(psi.clone(), phi.clone(), GrowthRule::default())?;
    let mut ranks = vec![RankRecord {
        n: 1,
        psi: 1,
        c_n: 1.0 / rank_one.partial_sum(1),
        certificate: LevelCertificate {
            rank: 1,
            checked_m_range: (1, None),
            // α + 1 ≥ 1 bounds every test.
            max_expectation: 1.0,
            bound: alpha + 1.0,
            method,
            analytic: is_analytic,
            slack: 0.0,
            status: CertStatus::Certified,
        },
    }];

    for n in 2..=num_ranks {
        let floor = psi[(n - 1) as usize].max(n.checked_mul(n).ok_or(AdversaryError::Overflow(n))?);
        let lower = floor.checked_add(1).ok_or(AdversaryError::Overflow(n))?;
        let schedule = WeightSchedule::new(psi.clone(), phi.clone(), GrowthRule::default())?;
        let mu = truncate_schedule(&schedule, n)?;
        let bound = alpha + 1.0 / n as f64;

        let (chosen, max_expectation, m_end, slack) = match horizon {
            HorizonPolicy::Analytic => match analytic::search(test, &mu, lower, bound, n)? {
                Outcome::Admissible { psi, max_expectation, .. } => (psi, max_expectation, None, analytic::PAD),
                Outcome::Violation { m, value } => {
                    return Err(AdversaryError::LevelViolation { rank: n, m, value, bound, law: mu })
                }
            },
            HorizonPolicy::FiniteHorizon { multiplier, max_evaluations } => {
                let scan = Scan { test, mu: &mu, evaluator, rank: n, bound, multiplier, max_evaluations };
                let (psi, end, max_e, slack) = scan.run(lower)?;
                (psi, max_e, Some(end), slack)
            }
        };

        psi.push(chosen);
        ranks.push(RankRecord {
            n,
            psi: chosen,
            c_n: 1.0 / schedule.partial_sum(n),
            certificate: LevelCertificate {
                rank: n,
                checked_m_range: (chosen, m_end),
                max_expectation,
                bound,
                method,
                analytic: is_analytic,
                slack,
                status,
            },
        });
    }

    let schedule = WeightSchedule::new(psi, phi, GrowthRule::default())?;
    let final_law = TailPmf::new(schedule, TailPmf::DEFAULT_EPS)?;
    Ok(AdversarySchedule { alpha, ranks, final_law, test: test.spec(), config_hash: None })
}

/// Finite-horizon search: candidate ψ is admissible when every m in
/// [ψ, multiplier·ψ] passes. A violation at m rules out every candidate ≤ m,
/// so the scan jumps past the largest violation in the window; the first
/// admissible candidate is therefore the smallest.
struct Scan<'a> {
    test: &'a TestFamily,
    mu: &'a FinitePmf,
    evaluator: Evaluator,
    rank: u64,
    bound: f64,
    multiplier: u64,
    max_evaluations: u64,
}

impl Scan<'_> {
    /// Upper confidence value of 𝔼_{μ}[A_m] and the slack it includes.
    fn upper(&self, law: &Law, m: u64) -> Result<(f64, f64), AdversaryError> {
        let evaluator = match self.evaluator {
            Evaluator::MonteCarlo { reps, conf, seed } => {
                Evaluator::MonteCarlo { reps, conf, seed: derive_seed(seed, &[self.rank, m]) }
            }
            other => other,
        };
        let report = evaluate(self.test, law, m, &evaluator)?;
        let slack = match self.evaluator {
            Evaluator::MonteCarlo { reps, conf, .. } => hoeffding_one_sided(reps, conf),
            _ => report.half_width,
        };
        Ok((report.value + slack, slack))
    }

    fn run(&self, lower: u64) -> Result<(u64, u64, f64, f64), AdversaryError> {
        let law = Law::Finite(self.mu.clone());
        let mut cache: HashMap<u64, (f64, f64)> = HashMap::new();
        let mut candidate = lower;
        loop {
            let end = candidate.checked_mul(self.multiplier).ok_or(AdversaryError::Overflow(self.rank))?;
            let fresh: Vec<u64> = (candidate..=end).filter(|m| !cache.contains_key(m)).collect();
            if cache.len() as u64 + fresh.len() as u64 > self.max_evaluations {
                return Err(self.exhausted(&cache));
            }
            let values: Vec<Result<(u64, (f64, f64)), AdversaryError>> =
                fresh.par_iter().map(|&m| Ok((m, self.upper(&law, m)?))).collect();
            for v in values {
                let (m, val) = v?;
                cache.insert(m, val);
            }
            let last_violation = (candidate..=end).rev().find(|m| cache[m].0 > self.bound);
            match last_violation {
                None => {
                    let (max_e, slack) = (candidate..=end)
                        .map(|m| cache[&m])
                        .fold((0.0f64, 0.0f64), |(a, s), (v, sl)| (a.max(v), s.max(sl)));
                    return Ok((candidate, end, max_e, slack));
                }
                Some(v) => candidate = v.checked_add(1).ok_or(AdversaryError::Overflow(self.rank))?,
            }
        }
    }

    /// Out of budget: report the largest violation seen as the finding.
    fn exhausted(&self, cache: &HashMap<u64, (f64, f64)>) -> AdversaryError {
        let worst = cache.iter().filter(|(_, v)| v.0 > self.bound).max_by_key(|(m, _)| **m);
        match worst {
            Some((&m, &(value, _))) => {
                AdversaryError::LevelViolation { rank: self.rank, m, value, bound: self.bound, law: self.mu.clone() }
            }
            None => AdversaryError::BudgetExhausted { rank: self.rank, evaluations: cache.len() as u64 },
        }
    }
}

/// Result of the duality reduction for a family with level α under
/// infinite-support laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PartTwoOutcome {
    /// The dual family 1 − A stayed within 1 − α′ + 1/n on every μ₂ⁿ, giving
    /// an infinite-support law along which 𝔼[A] approaches at least α′.
    InfiniteCounterexample { schedule: AdversarySchedule },
    /// A finite law on which 𝔼[A_m] < α′ − 1/n: the liminf condition on
    /// finite-support laws fails there.
    FiniteWitness {
        rank: u64,
        m: u64,
        #[serde(serialize_with = "ser_f64")]
        value: f64,
        law: FinitePmf,
    },
}

/// The reduction from the infinite-support side to the finite-support side:
/// dualize the family and build an adversary at level 1 − α′.
pub fn part_two(
    test: &TestFamily,
    alpha: f64,
    alpha_prime: f64,
    num_ranks: u64,
    horizon: HorizonPolicy,
    evaluator: Evaluator,
) -> Result<PartTwoOutcome, AdversaryError> {
    let dual = dualize_for_part_two(test, alpha, alpha_prime)?;
    match build_adversary(&dual, 1.0 - alpha_prime, num_ranks, horizon, evaluator) {
        Ok(schedule) => Ok(PartTwoOutcome::InfiniteCounterexample { schedule }),
        Err(AdversaryError::LevelViolation { rank, m, value, law, .. }) => {
            Ok(PartTwoOutcome::FiniteWitness { rank, m, value: 1.0 - value, law })
        }
        Err(e) => Err(e),
    }
}
