//! Versioned JSON configs, one shape per subcommand. Unknown fields are
//! rejected everywhere.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use suptest_core::adversary::HorizonPolicy;
use suptest_core::dist::{FinitePmf, Law, SampleSizeMap};
use suptest_core::teststat::{Evaluator, TestSpec};
use suptest_core::tsirelson::{EventEvaluator, PathEvent, ReduceMode, TorusLaw, UniformMode};

use crate::CliError;

pub const SCHEMA: u32 = 1;

/// Fields every config carries.
pub trait Common {
    fn schema(&self) -> u32;
    fn seed(&self) -> Option<u64>;
    fn out(&self) -> Option<&PathBuf>;
}

macro_rules! common {
    ($($t:ty),*) => {$(
        impl Common for $t {
            fn schema(&self) -> u32 { self.schema }
            fn seed(&self) -> Option<u64> { self.seed }
            fn out(&self) -> Option<&PathBuf> { self.out.as_ref() }
        }
    )*};
}

common!(EvalTestConfig, BuildAdversaryConfig, VerifyAdversaryConfig, SimulateConfig, ClassifyConfig, ReduceEventConfig, TvDemoConfig);

/// Parses and schema-checks a config.
pub fn parse<C: DeserializeOwned + Common>(bytes: &[u8]) -> Result<C, CliError> {
    let cfg: C = serde_json::from_slice(bytes).map_err(|e| CliError::Config(e.to_string()))?;
    if cfg.schema() != SCHEMA {
        return Err(CliError::Config(format!("unsupported schema {}, expected {SCHEMA}", cfg.schema())));
    }
    Ok(cfg)
}

/// Ranks as an explicit list, an inclusive range, or `points` log-spaced
/// values between `from` and `to` (rounded, deduplicated).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Ranks {
    List(Vec<u64>),
    Log(LogRanks),
    Range(RangeRanks),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeRanks {
    pub from: u64,
    pub to: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRanks {
    pub from: u64,
    pub to: u64,
    pub points: u64,
}

impl Ranks {
    pub fn expand(&self) -> Result<Vec<u64>, CliError> {
        let ranks = match self {
            Ranks::List(v) => v.clone(),
            Ranks::Range(r) => (r.from..=r.to).collect(),
            Ranks::Log(l) => log_spaced(l.from, l.to, l.points),
        };
        if ranks.is_empty() || ranks.contains(&0) {
            return Err(CliError::Config("ranks must be nonempty and >= 1".into()));
        }
        Ok(ranks)
    }
}

pub fn log_spaced(from: u64, to: u64, points: u64) -> Vec<u64> {
    if from == 0 || to < from || points == 0 {
        return vec![];
    }
    if points == 1 {
        return vec![from];
    }
    let (a, b) = ((from as f64).ln(), (to as f64).ln());
    let mut out: Vec<u64> = (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            ((a + t * (b - a)).exp().round() as u64).clamp(from, to)
        })
        .collect();
    out.dedup();
    out
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalTestConfig {
    pub schema: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub law: Law,
    pub test: TestSpec,
    pub ranks: Ranks,
    #[serde(default)]
    pub evaluator: Evaluator,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartTwoConfig {
    pub alpha_prime: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildAdversaryConfig {
    pub schema: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub test: TestSpec,
    pub alpha: f64,
    pub ranks: u64,
    #[serde(default)]
    pub horizon: HorizonPolicy,
    #[serde(default)]
    pub evaluator: Evaluator,
    /// Run the duality reduction at level α′ instead of a direct build.
    #[serde(default)]
    pub part_two: Option<PartTwoConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyAdversaryConfig {
    pub schema: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Schedule JSON; relative paths resolve against the config's directory.
    pub schedule: PathBuf,
    /// Defaults to the test recorded in the schedule.
    #[serde(default)]
    pub test: Option<TestSpec>,
    #[serde(default)]
    pub evaluator: Evaluator,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub law: TorusLaw,
    pub depth: u64,
    #[serde(default)]
    pub uniform: UniformMode,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    pub schema: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub laws: Vec<TorusLaw>,
}

fn exact_reduce() -> ReduceMode {
    ReduceMode::Exact
}

fn brute_force() -> Evaluator {
    Evaluator::BruteForce
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceEventConfig {
    pub schema: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// The increment law μ on ℕ; paths are driven by its image f(μ).
    pub law: Law,
    pub event: PathEvent,
    #[serde(default)]
    pub phi: SampleSizeMap,
    pub ranks: Ranks,
    #[serde(default = "exact_reduce")]
    pub reduce: ReduceMode,
    #[serde(default = "brute_force")]
    pub evaluator: Evaluator,
    /// Optional direct path-space estimate for comparison.
    #[serde(default)]
    pub paths: Option<EventEvaluator>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvDemoConfig {
    pub schema: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub base: FinitePmf,
    pub deltas: Vec<f64>,
    pub n: u64,
}
