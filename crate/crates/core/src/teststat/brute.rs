use super::{ExpectationReport, TestError, TestFamily};
use crate::dist::FinitePmf;
use crate::numeric::NeumaierSum;

/// Largest tuple space the oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// 𝔼_law[Aₙ] by enumerating every φ(n)-tuple of support points, weighted by
/// its product probability.
pub fn brute_force_expectation(test: &TestFamily, law: &FinitePmf, n: u64) -> Result<ExpectationReport, TestError> {
    if n == 0 {
        return Err(TestError::InvalidParameter("n must be >= 1".into()));
    }
    let width = test.sample_size(n);
    let space = (law.len() as f64).powf(width as f64);
    if space > BRUTE_FORCE_LIMIT {
        return Err(TestError::TooLarge(space));
    }
    let width = width as usize;
    let (support, probs) = (law.support(), law.probs());
    let base = law.len();

    let mut idx = vec![0usize; width];
    let mut sample = vec![support[0]; width];
    // weight[i] = Π_{j ≤ i} probs[idx[j]]
    let mut weight = vec![0.0; width];
    let refresh = |from: usize, idx: &[usize], sample: &mut [u64], weight: &mut [f64]| {
        for i in from..idx.len() {
            sample[i] = support[idx[i]];
            let prev = if i == 0 { 1.0 } else { weight[i - 1] };
            weight[i] = prev * probs[idx[i]];
        }
    };
    refresh(0, &idx, &mut sample, &mut weight);

    let mut acc = NeumaierSum::new();
    let mut count = 0u64;
    loop {
        let w = weight.last().copied().unwrap_or(1.0);
        acc.add(w * test.eval_unchecked(n, &sample));
        count += 1;
        // Odometer increment, last coordinate fastest.
        let mut pos = width;
        loop {
            if pos == 0 {
                return Ok(ExpectationReport::exact(acc.value(), count));
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < base {
                break;
            }
            idx[pos] = 0;
        }
        refresh(pos, &idx, &mut sample, &mut weight);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teststat::dualize;

    #[test]
    fn split_max_uniform_pair() {
        let r = brute_force_expectation(&TestFamily::split_max(), &FinitePmf::uniform(0, 1).unwrap(), 1).unwrap();
        assert_eq!(r.value, 0.5);
        assert_eq!(r.evaluations, 4);
    }

    #[test]
    fn constant_test() {
        let law = FinitePmf::new(vec![1, 5, 9], vec![0.2, 0.3, 0.5]).unwrap();
        let r = brute_force_expectation(&TestFamily::constant(0.25).unwrap(), &law, 2).unwrap();
        assert!((r.value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dirac_evaluates_constant_tuple() {
        let r = brute_force_expectation(&TestFamily::bounded_max(3), &FinitePmf::dirac(4), 5).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn dual_sums_to_one() {
        let law = FinitePmf::uniform(0, 1).unwrap();
        let t = TestFamily::split_max();
        let a = brute_force_expectation(&t, &law, 2).unwrap().value;
        let b = brute_force_expectation(&dualize(&t), &law, 2).unwrap().value;
        assert!((a + b - 1.0).abs() < 1e-15);
        // P(max(X1,X2) = max(X3,X4)) = (1/4)² + (3/4)² = 5/8.
        assert!((a - 0.625).abs() < 1e-15);
    }

    #[test]
    fn guard() {
        let law = FinitePmf::uniform(0, 9).unwrap();
        assert!(matches!(
            brute_force_expectation(&TestFamily::split_max(), &law, 4),
            Err(TestError::TooLarge(_))
        ));
    }
}
