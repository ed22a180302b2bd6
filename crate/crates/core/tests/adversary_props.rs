use std::time::Instant;

use proptest::prelude::*;
use suptest_core::adversary::{
    build_adversary, part_two, tail_union_bound, verify_adversary, AdversaryError, AdversarySchedule, HorizonPolicy,
    PartTwoOutcome,
};
use suptest_core::dist::{truncate, FinitePmf};
use suptest_core::numeric::zeta2_tail;
use suptest_core::teststat::{dualize, Evaluator, TestFamily};

fn built_in_level_tests() -> impl Strategy<Value = TestFamily> {
    prop_oneof![
        Just(TestFamily::dual_split_max()),
        (0.0f64..0.3).prop_map(|c| TestFamily::constant(c).unwrap()),
    ]
}

fn assert_structure(s: &AdversarySchedule) {
    s.check_structure().unwrap();
    let psi = s.psi();
    assert_eq!(&psi[..2], &[1, 1]);
    for n in 2..psi.len() {
        assert!(psi[n] > psi[n - 1]);
        assert!(psi[n] > (n * n) as u64);
    }
    assert_eq!(truncate(&s.final_law, 1).unwrap(), FinitePmf::dirac(0));
    for r in &s.ranks {
        assert!(r.certificate.max_expectation <= r.certificate.bound);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn schedules_grow_and_verify(t in built_in_level_tests(), alpha in 0.3f64..0.9, ranks in 1u64..5) {
        let s = build_adversary(&t, alpha, ranks, HorizonPolicy::Analytic, Evaluator::default()).unwrap();
        assert_structure(&s);
        let rows = verify_adversary(&s, &t, &Evaluator::default()).unwrap();
        let mut running_min = f64::INFINITY;
        for r in &rows {
            // Three-term decomposition: μ₂ agrees with μ₂ⁿ off the tail event.
            prop_assert!(r.measured.value <= r.finite_part.value + r.tail_probability + r.measured.half_width + 1e-12);
            prop_assert!(r.finite_part.value <= r.term_level + 1e-12);
            running_min = running_min.min(r.measured.value);
            if r.n >= 2 {
                let n = r.n as f64;
                prop_assert!(running_min <= alpha + 1.0 / n + 1.0 / (n - 1.0));
            }
        }
    }

    #[test]
    fn union_term_below_coarse_and_monotone(t in built_in_level_tests(), alpha in 0.3f64..0.9) {
        let s = build_adversary(&t, alpha, 4, HorizonPolicy::Analytic, Evaluator::default()).unwrap();
        let w = s.final_law.schedule();
        let mut prev = f64::INFINITY;
        for n in 1..30 {
            let b = tail_union_bound(n, w);
            prop_assert!(b.term <= b.coarse);
            prop_assert!(b.term <= prev);
            prop_assert!((b.coarse - zeta2_tail(n)).abs() == 0.0);
            prev = b.term;
        }
    }
}

#[test]
fn dual_split_max_five_ranks_within_budget() {
    let t = TestFamily::dual_split_max();
    let start = Instant::now();
    let s = build_adversary(&t, 0.05, 5, HorizonPolicy::Analytic, Evaluator::default()).unwrap();
    let rows = verify_adversary(&s, &t, &Evaluator::default()).unwrap();
    assert!(start.elapsed().as_secs() < 60);
    assert_structure(&s);
    for r in &rows[1..] {
        let n = r.n as f64;
        assert!(r.measured.value + r.measured.half_width <= 0.05 + 1.0 / n + 1.0 / (n - 1.0));
    }
}

#[test]
fn rebuilds_are_identical() {
    let t = TestFamily::dual_split_max();
    let a = build_adversary(&t, 0.1, 4, HorizonPolicy::Analytic, Evaluator::default()).unwrap();
    let b = build_adversary(&t, 0.1, 4, HorizonPolicy::Analytic, Evaluator::default()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let ev = Evaluator::MonteCarlo { reps: 500, conf: 0.9, seed: 4 };
    let policy = HorizonPolicy::FiniteHorizon { multiplier: 1, max_evaluations: 1000 };
    let c = build_adversary(&t, 0.3, 3, policy, ev).unwrap();
    let d = build_adversary(&t, 0.3, 3, policy, ev).unwrap();
    assert_eq!(serde_json::to_string(&c).unwrap(), serde_json::to_string(&d).unwrap());
}

#[test]
fn split_max_itself_is_reported() {
    match build_adversary(&TestFamily::split_max(), 0.05, 4, HorizonPolicy::Analytic, Evaluator::default()) {
        Err(AdversaryError::LevelViolation { rank, value, bound, .. }) => {
            assert_eq!(rank, 2);
            assert!(value > bound);
        }
        other => panic!("expected a level violation, got {other:?}"),
    }
}

#[test]
fn bounded_support_acceptance_is_reported() {
    // 1{max ≤ N} is identically 1 under every law supported in [0, N].
    let t = dualize(&TestFamily::bounded_max(1));
    match build_adversary(&t, 0.1, 3, HorizonPolicy::Analytic, Evaluator::default()) {
        Err(AdversaryError::LevelViolation { rank: 2, value, .. }) => assert_eq!(value, 1.0),
        other => panic!("expected a level violation, got {other:?}"),
    }
    // With N = 0 the rank-2 law already puts mass above N.
    let t0 = dualize(&TestFamily::bounded_max(0));
    let s = build_adversary(&t0, 0.1, 4, HorizonPolicy::Analytic, Evaluator::default()).unwrap();
    verify_adversary(&s, &t0, &Evaluator::default()).unwrap();
}

#[test]
fn part_two_runs_through_duality() {
    let t = TestFamily::split_max();
    match part_two(&t, 0.2, 0.6, 4, HorizonPolicy::Analytic, Evaluator::default()).unwrap() {
        PartTwoOutcome::InfiniteCounterexample { schedule } => {
            assert_structure(&schedule);
            assert!((schedule.alpha - 0.4).abs() < 1e-15);
        }
        other => panic!("unexpected {other:?}"),
    }
}
