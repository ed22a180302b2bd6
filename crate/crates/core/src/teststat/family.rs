use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::TestError;
use crate::dist::SampleSizeMap;

/// Which hypothesis class a level claim refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// Laws on ℕ with finite support.
    FiniteSupport,
    /// Laws on ℕ with infinite support.
    InfiniteSupport,
}

impl Hypothesis {
    pub fn flipped(self) -> Self {
        match self {
            Hypothesis::FiniteSupport => Hypothesis::InfiniteSupport,
            Hypothesis::InfiniteSupport => Hypothesis::FiniteSupport,
        }
    }
}

/// Assertion that limsupₙ 𝔼[Aₙ] ≤ alpha for every law of a class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelClaim {
    pub alpha: f64,
    pub under: Hypothesis,
}

/// A user-supplied functional Aₙ: ℕ^{φ(n)} → [0,1].
pub trait Functional: Send + Sync + fmt::Debug {
    /// The sample-size map φ.
    fn phi(&self) -> SampleSizeMap;

    /// Aₙ(sample); `sample.len() == φ(n)` is guaranteed by callers.
    fn eval(&self, n: u64, sample: &[u64]) -> f64;

    fn name(&self) -> String;
}

#[derive(Debug, Clone)]
pub(crate) enum TestKind {
    Constant(f64),
    /// T₂ₙ = 1{max of first half = max of second half}, φ(n) = 2n.
    SplitMax,
    /// 1{max(X₁..Xₙ) ∧ (N+1) = N+1}, φ(n) = n.
    BoundedMax(u64),
    Custom(Arc<dyn Functional>),
    Dual(Box<TestKind>),
}

impl TestKind {
    fn phi(&self) -> SampleSizeMap {
        match self {
            TestKind::Constant(_) | TestKind::BoundedMax(_) => SampleSizeMap::Identity,
            TestKind::SplitMax => SampleSizeMap::Linear(2),
            TestKind::Custom(f) => f.phi(),
            TestKind::Dual(inner) => inner.phi(),
        }
    }

    fn eval(&self, n: u64, sample: &[u64]) -> f64 {
        match self {
            TestKind::Constant(c) => *c,
            TestKind::SplitMax => {
                let (a, b) = sample.split_at(sample.len() / 2);
                f64::from(a.iter().max() == b.iter().max())
            }
            TestKind::BoundedMax(bound) => {
                let top = sample.iter().copied().max().unwrap_or(0);
                f64::from(top > *bound)
            }
            TestKind::Custom(f) => f.eval(n, sample).clamp(0.0, 1.0),
            TestKind::Dual(inner) => 1.0 - inner.eval(n, sample),
        }
    }

    fn name(&self) -> String {
        match self {
            TestKind::Constant(c) => format!("constant({c})"),
            TestKind::SplitMax => "split_max".into(),
            TestKind::BoundedMax(b) => format!("bounded_max({b})"),
            TestKind::Custom(f) => f.name(),
            TestKind::Dual(inner) => format!("dual({})", inner.name()),
        }
    }

    fn spec(&self) -> Option<TestSpec> {
        Some(match self {
            TestKind::Constant(c) => TestSpec::Constant { value: *c },
            TestKind::SplitMax => TestSpec::SplitMax,
            TestKind::BoundedMax(b) => TestSpec::BoundedMax { bound: *b },
            TestKind::Custom(_) => return None,
            TestKind::Dual(inner) => match **inner {
                TestKind::SplitMax => TestSpec::DualSplitMax,
                _ => TestSpec::Dual { inner: Box::new(inner.spec()?) },
            },
        })
    }
}

/// A sequence of test functionals Aₙ: ℕ^{φ(n)} → [0,1] together with its
/// sample-size map and an optional level claim.
#[derive(Debug, Clone)]
pub struct TestFamily {
    pub(crate) kind: TestKind,
    level_claim: Option<LevelClaim>,
}

impl TestFamily {
    fn from_kind(kind: TestKind) -> Self {
        Self { kind, level_claim: None }
    }

    /// Aₙ ≡ value.
    pub fn constant(value: f64) -> Result<Self, TestError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(TestError::InvalidParameter(format!("constant test value {value} not in [0,1]")));
        }
        Ok(Self::from_kind(TestKind::Constant(value)))
    }

    /// The split-max family Aₙ = T₂ₙ with φ(n) = 2n.
    pub fn split_max() -> Self {
        Self::from_kind(TestKind::SplitMax)
    }

    /// Aₙ = 1 − T₂ₙ. Rejects finiteness when the half-sample maxima differ;
    /// its expectation vanishes under every finitely supported law.
    pub fn dual_split_max() -> Self {
        dualize(&Self::split_max()).with_level_claim(LevelClaim { alpha: 0.0, under: Hypothesis::FiniteSupport })
    }

    /// Aₙ = 1{max(X₁,…,Xₙ) ∧ (N+1) = N+1}: rejects "support ⊆ [0, N]".
    pub fn bounded_max(bound: u64) -> Self {
        Self::from_kind(TestKind::BoundedMax(bound))
    }

    pub fn custom(f: Arc<dyn Functional>) -> Result<Self, TestError> {
        f.phi().validate()?;
        Ok(Self::from_kind(TestKind::Custom(f)))
    }

    /// True for the built-in families, which have closed-form expectations.
    pub fn has_closed_form(&self) -> bool {
        fn walk(k: &TestKind) -> bool {
            match k {
                TestKind::Custom(_) => false,
                TestKind::Dual(inner) => walk(inner),
                _ => true,
            }
        }
        walk(&self.kind)
    }

    pub fn with_level_claim(mut self, claim: LevelClaim) -> Self {
        self.level_claim = Some(claim);
        self
    }

    pub fn level_claim(&self) -> Option<LevelClaim> {
        self.level_claim
    }

    /// The sample-size map φ.
    pub fn phi(&self) -> SampleSizeMap {
        self.kind.phi()
    }

    /// φ(n).
    pub fn sample_size(&self, n: u64) -> u64 {
        self.kind.phi().apply(n)
    }

    /// Aₙ(sample), checking that the sample has length φ(n).
    pub fn eval(&self, n: u64, sample: &[u64]) -> Result<f64, TestError> {
        if n == 0 {
            return Err(TestError::InvalidParameter("test rank n must be >= 1".into()));
        }
        let expected = self.sample_size(n);
        if sample.len() as u64 != expected {
            return Err(TestError::InvalidSample(format!(
                "rank {n} needs {expected} observations, got {}",
                sample.len()
            )));
        }
        Ok(self.kind.eval(n, sample))
    }

    pub(crate) fn eval_unchecked(&self, n: u64, sample: &[u64]) -> f64 {
        self.kind.eval(n, sample)
    }

    pub fn name(&self) -> String {
        self.kind.name()
    }

    /// Serializable description, `None` for custom functionals.
    pub fn spec(&self) -> Option<TestSpec> {
        self.kind.spec()
    }
}

/// Aₙ ↦ 1 − Aₙ. An involution: dualizing twice returns the original family
/// unchanged. The level claim is dropped because it does not transfer; see
/// [`dualize_for_part_two`].
pub fn dualize(test: &TestFamily) -> TestFamily {
    let kind = match &test.kind {
        TestKind::Dual(inner) => (**inner).clone(),
        other => TestKind::Dual(Box::new(other.clone())),
    };
    TestFamily::from_kind(kind)
}

/// The dual family used to turn a level claim under one hypothesis class
/// into a construction against the other: if A has level `alpha` and
/// `alpha_prime ∈ (alpha, 1)`, the dual 1 − A is claimed at level
/// 1 − `alpha_prime` under the opposite class.
pub fn dualize_for_part_two(test: &TestFamily, alpha: f64, alpha_prime: f64) -> Result<TestFamily, TestError> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(TestError::InvalidParameter(format!("alpha {alpha} not in [0,1)")));
    }
    if !(alpha_prime > alpha && alpha_prime < 1.0) {
        return Err(TestError::InvalidParameter(format!("alpha' {alpha_prime} not in (alpha, 1)")));
    }
    let under = test.level_claim().map_or(Hypothesis::InfiniteSupport, |c| c.under).flipped();
    Ok(dualize(test).with_level_claim(LevelClaim { alpha: 1.0 - alpha_prime, under }))
}

/// T₂ₙ: 1 iff the maxima of the two halves of the sample coincide.
pub fn split_max_statistic(sample: &[u64]) -> Result<u8, TestError> {
    if sample.len() < 2 || !sample.len().is_multiple_of(2) {
        return Err(TestError::InvalidSample(format!(
            "split-max needs an even sample of length >= 2, got {}",
            sample.len()
        )));
    }
    let (a, b) = sample.split_at(sample.len() / 2);
    Ok(u8::from(a.iter().max() == b.iter().max()))
}

/// max(sample) ∧ (N+1).
pub fn bounded_support_statistic(sample: &[u64], bound: u64) -> Result<u64, TestError> {
    let top = sample
        .iter()
        .copied()
        .max()
        .ok_or_else(|| TestError::InvalidSample("empty sample".into()))?;
    Ok(top.min(bound.saturating_add(1)))
}

/// JSON description of the built-in families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestSpec {
    SplitMax,
    DualSplitMax,
    Constant { value: f64 },
    BoundedMax { bound: u64 },
    Dual { inner: Box<TestSpec> },
}

impl TestSpec {
    pub fn build(&self) -> Result<TestFamily, TestError> {
        Ok(match self {
            TestSpec::SplitMax => TestFamily::split_max(),
            TestSpec::DualSplitMax => TestFamily::dual_split_max(),
            TestSpec::Constant { value } => TestFamily::constant(*value)?,
            TestSpec::BoundedMax { bound } => TestFamily::bounded_max(*bound),
            TestSpec::Dual { inner } => dualize(&inner.build()?),
        })
    }
}
