use proptest::prelude::*;
use suptest_core::dist::{
    mix_with_tail, normalize_finite, sample, tv_distance, tv_distance_bounded, truncate, FinitePmf, Geometric,
    GrowthRule, IntegerLaw, Law, SampleSizeMap, TailPmf, WeightSchedule,
};

fn finite_law() -> impl Strategy<Value = FinitePmf> {
    prop::collection::btree_map(0u64..40, 0.01f64..10.0, 1..8).prop_map(|m| {
        let (support, weights): (Vec<u64>, Vec<f64>) = m.into_iter().unzip();
        normalize_finite(support, &weights).unwrap()
    })
}

fn schedule() -> impl Strategy<Value = WeightSchedule> {
    (prop::collection::vec(1u64..50, 0..4), 1u64..4).prop_map(|(steps, factor)| {
        let mut psi = vec![1u64, 1];
        for (i, s) in steps.into_iter().enumerate() {
            let k = (i + 2) as u64;
            let next = psi[psi.len() - 1].max(k * k) + s;
            psi.push(next);
        }
        WeightSchedule::new(psi, SampleSizeMap::Linear(factor), GrowthRule::default()).unwrap()
    })
}

proptest! {
    #[test]
    fn normalized_laws_sum_to_one(law in finite_law()) {
        let total: f64 = law.probs().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(law.probs().iter().all(|&p| p > 0.0));
    }

    #[test]
    fn cdf_monotone_and_complementary(law in finite_law()) {
        let mut prev = 0.0;
        for k in 0..45 {
            let c = law.cdf(k);
            prop_assert!(c >= prev);
            prop_assert!((c + law.sf(k) - 1.0).abs() <= 1e-12);
            prev = c;
        }
        prop_assert_eq!(law.cdf(law.max_point()), 1.0);
    }

    #[test]
    fn tv_is_a_metric(a in finite_law(), b in finite_law(), c in finite_law()) {
        let ab = tv_distance(&a, &b);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - tv_distance(&b, &a)).abs() <= 1e-15);
        prop_assert_eq!(tv_distance(&a, &a), 0.0);
        prop_assert!(ab <= tv_distance(&a, &c) + tv_distance(&c, &b) + 1e-12);
    }

    #[test]
    fn truncation_matches_direct_normalization(s in schedule(), n in 1u64..12) {
        let tail = TailPmf::new(s.clone(), 1e-13).unwrap();
        let t = truncate(&tail, n).unwrap();
        let weights: Vec<f64> = (0..n).map(|k| s.inv_weight_sq(k)).collect();
        let direct = normalize_finite((0..n).collect(), &weights).unwrap();
        prop_assert_eq!(t.support(), direct.support());
        for (a, b) in t.probs().iter().zip(direct.probs()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
        // Conditioning the tail law on {0..n−1} gives the same masses.
        let mass_below = tail.cdf(n - 1);
        for k in 0..n {
            prop_assert!((tail.pmf(k) / mass_below - t.pmf(k)).abs() <= 1e-12);
        }
    }

    #[test]
    fn tail_law_is_normalized(s in schedule()) {
        let tail = TailPmf::new(s, 1e-13).unwrap();
        let cut = 20_000u64;
        let below: f64 = (0..=cut).map(|k| tail.pmf(k)).sum();
        prop_assert!((below + tail.sf(cut) - 1.0).abs() <= 1e-11);
        prop_assert!(tail.sf(cut) <= tail.tail_bound(cut));
    }

    #[test]
    fn mixture_tv_equals_delta(law in finite_law(), delta in 0.001f64..0.5) {
        let mix = mix_with_tail(&law, delta).unwrap();
        let (tv, err) = tv_distance_bounded(&law, &mix);
        prop_assert!((tv - delta).abs() <= 1e-10);
        prop_assert!(err <= 1e-10);
    }
}

#[test]
fn sample_frequencies_within_four_standard_errors() {
    let law = FinitePmf::new(vec![0, 2, 5, 9], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let draws = 1_000_000usize;
    let xs = sample(&law, 2024, draws);
    for (&k, &p) in law.support().iter().zip(law.probs()) {
        let freq = xs.iter().filter(|&&x| x == k).count() as f64 / draws as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((freq - p).abs() <= 4.0 * se, "k = {k}: {freq} vs {p}");
    }
    assert!(xs.iter().all(|x| law.support().contains(x)));
}

#[test]
fn geometric_frequencies() {
    let g = Geometric::half();
    let draws = 1_000_000usize;
    let xs = sample(&g, 7, draws);
    for k in 0..6u64 {
        let p = g.pmf(k);
        let freq = xs.iter().filter(|&&x| x == k).count() as f64 / draws as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((freq - p).abs() <= 4.0 * se, "k = {k}");
    }
}

#[test]
fn product_bound_is_linear_in_n() {
    let mix = mix_with_tail(&FinitePmf::uniform(0, 4).unwrap(), 0.01).unwrap();
    assert!((mix.product_tv_bound(50) - 0.5).abs() < 1e-15);
    let law: Law = mix.into();
    assert!(!law.has_finite_support());
}
