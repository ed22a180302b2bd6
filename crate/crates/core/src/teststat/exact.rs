use super::family::TestKind;
use super::{ExpectationReport, TestError, TestFamily};
use crate::dist::{tail_cutoff, IntegerLaw};
use crate::numeric::{one_minus_pow_complement, pow_complement, NeumaierSum};

/// Truncation points beyond this are refused rather than summed.
const MAX_TERMS: u64 = 200_000_000;

/// P(Sₙ = k) = F(k)ⁿ − F(k−1)ⁿ for the maximum Sₙ of n i.i.d. draws,
/// with F(−1) = 0.
pub fn max_pmf<L: IntegerLaw + ?Sized>(law: &L, n: u64, k: u64) -> f64 {
    let upper = pow_complement(law.sf(k), n);
    let lower = if k == 0 { 0.0 } else { pow_complement(law.sf(k - 1), n) };
    (upper - lower).max(0.0)
}

/// 𝔼[T₂ₙ] = Σₖ P(Sₙ = k)², the probability that two independent maxima of
/// n draws coincide.
///
/// Exact for finitely supported laws. Otherwise the sum stops at the
/// smallest K whose certified remainder keeps the total error within `tol`;
/// the reported half-width covers the neglected terms, the uncertainty in
/// P(X > K) and the law's stored mass error.
pub fn exact_split_max_expectation<L: IntegerLaw + ?Sized>(
    law: &L,
    n: u64,
    tol: f64,
) -> Result<ExpectationReport, TestError> {
    if n == 0 {
        return Err(TestError::InvalidParameter("n must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(TestError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }

    if let Some(f) = law.as_finite() {
        let mut acc = NeumaierSum::new();
        let mut prev = 0.0;
        for (_, _, sf) in f.iter_with_tails() {
            let cur = pow_complement(sf, n);
            let p = cur - prev;
            acc.add(p * p);
            prev = cur;
        }
        return Ok(ExpectationReport::exact(acc.value(), f.len() as u64));
    }

    // Tail budget s with 1 − (1 − s)ⁿ = tol/3.
    let target = -((-tol / 3.0).ln_1p() / n as f64).exp_m1();
    let cutoff = tail_cutoff(law, target);
    if cutoff > MAX_TERMS {
        return Err(TestError::InvalidParameter(format!(
            "truncation point {cutoff} for n = {n}, tol = {tol} exceeds {MAX_TERMS}"
        )));
    }
    let tb = law.tail_bound(cutoff);
    let remainder = one_minus_pow_complement(tb, n);

    let mut surv = NeumaierSum::new();
    surv.add(law.sf(cutoff));
    let mut acc = NeumaierSum::new();
    let mut upper = pow_complement(surv.value(), n);
    for k in (0..=cutoff).rev() {
        let lower = if k == 0 {
            0.0
        } else {
            surv.add(law.pmf(k));
            pow_complement(surv.value(), n)
        };
        let p = upper - lower;
        acc.add(p * p);
        upper = lower;
    }

    // Perturbing the law by total variation τ moves an expectation over 2n
    // draws by at most 2nτ; τ covers the estimate of P(X > K) and the
    // relative error on every mass.
    let tv = tb + 2.0 * law.relative_mass_error() + 4.0 * f64::EPSILON;
    let half_width = (remainder + 2.0 * n as f64 * tv).min(1.0);
    Ok(ExpectationReport::truncated(acc.value(), half_width, cutoff + 1))
}

/// Closed-form 𝔼_law[Aₙ] for the built-in families and their duals.
pub fn exact_expectation<L: IntegerLaw + ?Sized>(
    test: &TestFamily,
    law: &L,
    n: u64,
    tol: f64,
) -> Result<ExpectationReport, TestError> {
    kind_expectation(&test.kind, law, n, tol)
}

fn kind_expectation<L: IntegerLaw + ?Sized>(
    kind: &TestKind,
    law: &L,
    n: u64,
    tol: f64,
) -> Result<ExpectationReport, TestError> {
    if n == 0 {
        return Err(TestError::InvalidParameter("n must be >= 1".into()));
    }
    match kind {
        TestKind::Constant(c) => Ok(ExpectationReport::exact(*c, 0)),
        TestKind::SplitMax => exact_split_max_expectation(law, n, tol),
        TestKind::BoundedMax(bound) => {
            // P(max > N) = 1 − F(N)ⁿ.
            let sf = law.sf(*bound);
            let value = one_minus_pow_complement(sf, n);
            if law.as_finite().is_some() {
                Ok(ExpectationReport::exact(value, 1))
            } else {
                // Survival values of infinite laws carry the mass error plus
                // the remainder of a finite explicit window.
                let sf_err = sf * law.relative_mass_error() + law.tail_bound(bound.saturating_add(1 << 14));
                Ok(ExpectationReport::truncated(value, (n as f64 * sf_err).min(1.0), 1))
            }
        }
        TestKind::Dual(inner) => Ok(kind_expectation(inner, law, n, tol)?.complement()),
        TestKind::Custom(f) => Err(TestError::NoClosedForm(f.name())),
    }
}
