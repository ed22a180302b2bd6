//! Closed-form control of m ↦ 𝔼_μ[A_m] over all m ≥ ψ for the built-in
//! families on a finite law μ.

use super::AdversaryError;
use crate::dist::{FinitePmf, IntegerLaw};
use crate::numeric::{one_minus_pow_complement, pow_complement};
use crate::teststat::{exact_split_max_expectation, TestFamily, TestKind};

/// Allowance for rounding in closed-form values.
pub(crate) const PAD: f64 = 1e-12;

/// Interval pieces the dual split-max certificate may examine per rank.
const MAX_PIECES: u64 = 20_000_000;

pub(crate) enum Outcome {
    Admissible { psi: u64, max_expectation: f64 },
    Violation { m: u64, value: f64 },
}

enum Profile {
    Constant(f64),
    /// 1 − F(N)^m, nondecreasing in m.
    Exceeds(u64),
    /// F(N)^m, nonincreasing in m.
    Within(u64),
    SplitMax,
    DualSplitMax,
}

fn profile(kind: &TestKind) -> Option<Profile> {
    Some(match kind {
        TestKind::Constant(c) => Profile::Constant(*c),
        TestKind::BoundedMax(b) => Profile::Exceeds(*b),
        TestKind::SplitMax => Profile::SplitMax,
        TestKind::Custom(_) => return None,
        TestKind::Dual(inner) => match &**inner {
            TestKind::Constant(c) => Profile::Constant(1.0 - c),
            TestKind::BoundedMax(b) => Profile::Within(*b),
            TestKind::SplitMax => Profile::DualSplitMax,
            TestKind::Dual(x) => return profile(x),
            TestKind::Custom(_) => return None,
        },
    })
}

pub(crate) fn supports(test: &TestFamily) -> bool {
    profile(&test.kind).is_some()
}

/// Smallest ψ ≥ `lower` with 𝔼_μ[A_m] ≤ `bound` for every m ≥ ψ, or a
/// violating m when the supremum over any tail of m exceeds the bound.
pub(crate) fn search(
    test: &TestFamily,
    mu: &FinitePmf,
    lower: u64,
    bound: f64,
    rank: u64,
) -> Result<Outcome, AdversaryError> {
    let profile = profile(&test.kind)
        .ok_or_else(|| AdversaryError::InvalidParameter("analytic horizon needs a built-in test family".into()))?;
    let admissible = |psi, max_expectation| Outcome::Admissible { psi, max_expectation };
    Ok(match profile {
        Profile::Constant(c) => {
            if c <= bound {
                admissible(lower, c)
            } else {
                Outcome::Violation { m: lower, value: c }
            }
        }
        Profile::Exceeds(cap) => {
            let s = mu.sf(cap);
            if s == 0.0 {
                admissible(lower, 0.0)
            } else if bound >= 1.0 {
                admissible(lower, 1.0)
            } else {
                // Tends to 1: find a witness by doubling.
                witness(lower, bound, |m| one_minus_pow_complement(s, m))
            }
        }
        Profile::Within(cap) => {
            let s = mu.sf(cap);
            if bound >= 1.0 {
                admissible(lower, pow_complement(s, lower))
            } else if s == 0.0 {
                Outcome::Violation { m: lower, value: 1.0 }
            } else {
                let m = first_at_most(lower, bound, |m| pow_complement(s, m));
                admissible(m, pow_complement(s, m))
            }
        }
        Profile::SplitMax => {
            if bound >= 1.0 {
                admissible(lower, 1.0)
            } else {
                witness(lower, bound, |m| {
                    exact_split_max_expectation(mu, m, 1.0).map(|r| r.value).unwrap_or(1.0)
                })
            }
        }
        Profile::DualSplitMax => dual_split_max(mu, lower, bound, rank)?,
    })
}

/// Doubles m from `lower` until `f(m) > bound`.
fn witness(lower: u64, bound: f64, f: impl Fn(u64) -> f64) -> Outcome {
    let mut m = lower;
    loop {
        let v = f(m);
        if v > bound || m > u64::MAX / 2 {
            return Outcome::Violation { m, value: v };
        }
        m *= 2;
    }
}

/// Smallest m ≥ lower with g(m) ≤ target for a nonincreasing g that
/// eventually drops below target.
fn first_at_most(lower: u64, target: f64, g: impl Fn(u64) -> f64) -> u64 {
    if g(lower) <= target {
        return lower;
    }
    let mut hi = lower;
    while g(hi) > target {
        hi = hi.saturating_mul(2);
        if hi == u64::MAX {
            break;
        }
    }
    let mut lo = lower;
    // Invariant: g(lo) > target, g(hi) ≤ target.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if g(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// 𝔼_μ[1 − T₂ₘ] = 1 − Σₖ Pₖ(m)² with Pₖ(m) = F(k)^m − F(k−1)^m.
///
/// For m ≥ m*, 1 − T₂ₘ is controlled by the endpoint term alone:
/// 𝔼 ≤ 1 − P_r(m)² = 2qᵐ − q²ᵐ with q = 1 − μ(r), decreasing in m. Below m*,
/// intervals [a, b] are bounded by Pₖ(m) ≥ F(k)ᵇ − F(k−1)ᵃ and split until
/// the bound certifies them or a single violating m is isolated. The search
/// runs right to left, so the first violation found is the last one.
fn dual_split_max(mu: &FinitePmf, lower: u64, bound: f64, rank: u64) -> Result<Outcome, AdversaryError> {
    let p_end = mu.endpoint_mass();
    let tail = |m: u64| {
        let x = pow_complement(p_end, m);
        2.0 * x - x * x + PAD
    };
    if bound >= 1.0 {
        return Ok(Outcome::Admissible { psi: lower, max_expectation: 1.0 });
    }
    if !(tail(u64::MAX) <= bound) {
        // Only possible when the rounding pad alone exceeds the bound.
        return Ok(Outcome::Violation { m: lower, value: tail(u64::MAX) });
    }
    let m_star = first_at_most(lower, bound, tail);
    if m_star == lower {
        return Ok(Outcome::Admissible { psi: lower, max_expectation: tail(lower) });
    }

    // sf before each support point, then at it: P(X ≥ k) and P(X > k).
    let sf_at: Vec<f64> = mu.iter_with_tails().map(|(_, _, s)| s).collect();
    let upper_bound = |a: u64, b: u64| {
        let mut total = 0.0;
        let mut before = 1.0;
        for &s in &sf_at {
            let hi = pow_complement(s, b);
            let lo = pow_complement(before, a);
            let p = (hi - lo).max(0.0);
            total += p * p;
            before = s;
        }
        (1.0 - total) + PAD
    };

    let mut stack = vec![(lower, m_star - 1)];
    let mut pieces = 0u64;
    let mut max_certified = tail(m_star);
    while let Some((a, b)) = stack.pop() {
        pieces += 1;
        if pieces > MAX_PIECES {
            return Err(AdversaryError::BudgetExhausted { rank, evaluations: pieces });
        }
        let u = upper_bound(a, b);
        if u <= bound {
            max_certified = max_certified.max(u);
            continue;
        }
        if a == b {
            let psi = a.checked_add(1).ok_or(AdversaryError::Overflow(rank))?;
            return Ok(Outcome::Admissible { psi, max_expectation: max_certified });
        }
        let mid = a + (b - a) / 2;
        stack.push((a, mid));
        stack.push((mid + 1, b));
    }
    Ok(Outcome::Admissible { psi: lower, max_expectation: max_certified })
}
