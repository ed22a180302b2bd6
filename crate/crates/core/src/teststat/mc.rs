use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ExpectationReport, TestError, TestFamily};
use crate::dist::{IntegerLaw, InverseCdfSampler};
use crate::numeric::{derive_seed, hoeffding_two_sided, NeumaierSum};

/// Replications per independently seeded chunk. Fixed, so results do not
/// depend on the number of worker threads.
const CHUNK: u64 = 4096;

/// Sample mean of `reps` evaluations of Aₙ on independent samples, with a
/// two-sided Hoeffding half-width at confidence `conf`. Deterministic given
/// `seed`.
pub fn mc_expectation<L>(
    test: &TestFamily,
    law: &L,
    n: u64,
    reps: u64,
    conf: f64,
    seed: u64,
) -> Result<ExpectationReport, TestError>
where
    L: IntegerLaw + Sync + ?Sized,
{
    if n == 0 {
        return Err(TestError::InvalidParameter("n must be >= 1".into()));
    }
    if reps == 0 {
        return Err(TestError::InvalidParameter("reps must be >= 1".into()));
    }
    if !(conf > 0.0 && conf < 1.0) {
        return Err(TestError::InvalidParameter(format!("confidence {conf} not in (0,1)")));
    }
    let width = usize::try_from(test.sample_size(n))
        .map_err(|_| TestError::InvalidParameter("sample size does not fit in memory".into()))?;
    let sampler = InverseCdfSampler::new(law);
    let chunks = reps.div_ceil(CHUNK);

    let sums: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[n, chunk]));
            let count = CHUNK.min(reps - chunk * CHUNK);
            let mut sample = vec![0u64; width];
            let mut acc = NeumaierSum::new();
            for _ in 0..count {
                sampler.fill(&mut rng, &mut sample);
                acc.add(test.eval_unchecked(n, &sample));
            }
            acc.value()
        })
        .collect();
    let total: NeumaierSum = sums.into_iter().collect();
    let value = total.value() / reps as f64;
    Ok(ExpectationReport::monte_carlo(value, hoeffding_two_sided(reps, conf), conf, reps))
}
