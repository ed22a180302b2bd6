use serde::Serialize;
use suptest_core::adversary::{
    self, AdversaryError, AdversarySchedule, PartTwoOutcome, RankBound,
};
use suptest_core::dist::{mix_with_tail, tv_distance_bounded, FinitePmf};
use suptest_core::numeric::{derive_seed, ser_f64};
use suptest_core::teststat::{self, ErrorKind, Evaluator, TestError, TestFamily, TestSpec};
use suptest_core::tsirelson::{
    self, CaseLabel, EventEvaluator, ReduceMode, ReducedEvent, TorusPoint, TsirelsonError,
};

use crate::artifacts::{Cell, Run};
use crate::config::{
    self, BuildAdversaryConfig, ClassifyConfig, Common, EvalTestConfig, ReduceEventConfig, SimulateConfig,
    TvDemoConfig, VerifyAdversaryConfig,
};
use crate::{CliError, Ctx};

fn start<C: serde::de::DeserializeOwned + Common>(ctx: &Ctx, name: &'static str) -> Result<(C, Run), CliError> {
    let cfg: C = config::parse(&ctx.bytes)?;
    let run = Run::new(name, ctx.out_dir(cfg.out()), &ctx.bytes, ctx.seed(cfg.seed()))?;
    Ok((cfg, run))
}

fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

fn build_test(spec: &TestSpec) -> Result<TestFamily, CliError> {
    spec.build().map_err(|e| CliError::Config(e.to_string()))
}

fn test_err(e: TestError) -> CliError {
    match e {
        TestError::InvalidParameter(_) => CliError::Config(e.to_string()),
        e => run_err(e),
    }
}

/// Monte Carlo seeds come from the run seed, one stream per label.
fn seeded(e: Evaluator, seed: u64, label: u64) -> Evaluator {
    match e {
        Evaluator::MonteCarlo { reps, conf, .. } => Evaluator::MonteCarlo { reps, conf, seed: derive_seed(seed, &[label]) },
        e => e,
    }
}

fn kind_name(k: ErrorKind) -> &'static str {
    match k {
        ErrorKind::Exact => "exact",
        ErrorKind::Truncated => "truncated",
        ErrorKind::MonteCarlo => "monte_carlo",
    }
}

pub fn eval_test(ctx: &Ctx) -> Result<(), CliError> {
    let (cfg, mut run): (EvalTestConfig, _) = start(ctx, "eval-test")?;
    let test = build_test(&cfg.test)?;
    let mut rows = vec![];
    for n in cfg.ranks.expand()? {
        let r = teststat::evaluate(&test, &cfg.law, n, &seeded(cfg.evaluator, run.seed(), n)).map_err(test_err)?;
        rows.push(vec![
            n.into(),
            r.value.into(),
            kind_name(r.error_kind).into(),
            r.half_width.into(),
            r.confidence.into(),
            r.evaluations.into(),
        ]);
    }
    run.csv("eval_test.csv", &["n", "value", "error_kind", "half_width", "confidence", "evaluations"], rows)?;
    run.finish("ok")
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Finding<'a> {
    LevelViolation {
        rank: u64,
        m: u64,
        #[serde(serialize_with = "ser_f64")]
        value: f64,
        #[serde(serialize_with = "ser_f64")]
        bound: f64,
        law: &'a FinitePmf,
    },
    VerificationFailure {
        rank: u64,
        rows: &'a [RankBound],
    },
}

fn adversary_err(e: AdversaryError) -> CliError {
    match e {
        AdversaryError::InvalidParameter(_) => CliError::Config(e.to_string()),
        AdversaryError::Test(t) => test_err(t),
        e => run_err(e),
    }
}

pub fn build_adversary(ctx: &Ctx) -> Result<(), CliError> {
    let (cfg, mut run): (BuildAdversaryConfig, _) = start(ctx, "build-adversary")?;
    let test = build_test(&cfg.test)?;
    let evaluator = seeded(cfg.evaluator, run.seed(), 0);

    if let Some(p2) = &cfg.part_two {
        let outcome = adversary::part_two(&test, cfg.alpha, p2.alpha_prime, cfg.ranks, cfg.horizon, evaluator)
            .map_err(adversary_err)?;
        if let PartTwoOutcome::InfiniteCounterexample { schedule } = &outcome {
            ranks_csv(&mut run, schedule)?;
        }
        run.json("part_two.json", &outcome)?;
        return run.finish("ok");
    }

    match adversary::build_adversary(&test, cfg.alpha, cfg.ranks, cfg.horizon, evaluator) {
        Ok(mut schedule) => {
            schedule.test = Some(cfg.test.clone());
            schedule.config_hash = Some(run.hash().to_string());
            run.json_raw("schedule.json", &schedule)?;
            ranks_csv(&mut run, &schedule)?;
            run.finish("ok")
        }
        Err(AdversaryError::LevelViolation { rank, m, value, bound, law }) => {
            run.json("finding.json", &Finding::LevelViolation { rank, m, value, bound, law: &law })?;
            run.finish("level_violation")?;
            Err(CliError::Finding(format!("level violation at rank {rank}: E[A_{m}] = {value} > {bound}")))
        }
        Err(e) => Err(adversary_err(e)),
    }
}

fn ranks_csv(run: &mut Run, s: &AdversarySchedule) -> Result<(), CliError> {
    let rows = s
        .ranks
        .iter()
        .map(|r| {
            let c = &r.certificate;
            vec![
                r.n.into(),
                r.psi.into(),
                r.c_n.into(),
                c.max_expectation.into(),
                c.bound.into(),
                c.slack.into(),
                c.checked_m_range.1.map_or(Cell::Empty, Cell::Int),
                c.analytic.into(),
            ]
        })
        .collect();
    run.csv("ranks.csv", &["n", "psi", "c_n", "max_expectation", "bound", "slack", "checked_to", "analytic"], rows)
}

pub fn verify_adversary(ctx: &Ctx) -> Result<(), CliError> {
    let (cfg, mut run): (VerifyAdversaryConfig, _) = start(ctx, "verify-adversary")?;
    let path = ctx.resolve(&cfg.schedule);
    let text = std::fs::read(&path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let schedule: AdversarySchedule =
        serde_json::from_slice(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let spec = cfg
        .test
        .clone()
        .or_else(|| schedule.test.clone())
        .ok_or_else(|| CliError::Config("no test given and none recorded in the schedule".into()))?;
    let test = build_test(&spec)?;
    let evaluator = seeded(cfg.evaluator, run.seed(), 0);

    let (rows, failed) = match adversary::verify_adversary(&schedule, &test, &evaluator) {
        Ok(rows) => (rows, None),
        Err(AdversaryError::VerificationFailure { rank, rows }) => (rows, Some(rank)),
        Err(e) => return Err(adversary_err(e)),
    };
    let csv_rows = rows
        .iter()
        .map(|b| {
            vec![
                b.n.into(),
                b.psi.into(),
                b.measured.value.into(),
                b.measured.half_width.into(),
                b.finite_part.value.into(),
                b.term_level.into(),
                b.term_tail.into(),
                b.tail_probability.into(),
                b.coarse_tail.into(),
                b.total.into(),
                b.pass.into(),
            ]
        })
        .collect();
    run.csv(
        "verify.csv",
        &[
            "rank",
            "psi",
            "measured",
            "half_width",
            "finite_part",
            "term_level",
            "term_tail",
            "tail_probability",
            "coarse_tail",
            "total",
            "pass",
        ],
        csv_rows,
    )?;
    run.json("verify.json", &rows)?;
    match failed {
        None => run.finish("ok"),
        Some(rank) => {
            run.json("finding.json", &Finding::VerificationFailure { rank, rows: &rows })?;
            run.finish("verification_failure")?;
            Err(CliError::Finding(format!("verification failed at rank {rank}")))
        }
    }
}

fn tsirelson_err(e: TsirelsonError) -> CliError {
    match e {
        TsirelsonError::InvalidEvent(_) | TsirelsonError::InvalidLaw(_) | TsirelsonError::InvalidFraction(_) => {
            CliError::Config(e.to_string())
        }
        e => run_err(e),
    }
}

pub fn simulate_tsirelson(ctx: &Ctx) -> Result<(), CliError> {
    let (cfg, mut run): (SimulateConfig, _) = start(ctx, "simulate-tsirelson")?;
    let path = tsirelson::simulate_uniform_solution(&cfg.law, cfg.depth, run.seed(), cfg.uniform)
        .map_err(tsirelson_err)?;
    if path.iter().all(TorusPoint::is_exact) {
        let rows = path
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let f = p.as_frac().expect("exact point");
                vec![(k as u64).into(), f.num().into(), f.den().into()]
            })
            .collect();
        run.csv("path.csv", &["k", "num", "den"], rows)?;
    } else {
        let rows = path.iter().enumerate().map(|(k, p)| vec![(k as u64).into(), p.to_f64().into()]).collect();
        run.csv("path.csv", &["k", "value"], rows)?;
    }
    run.finish("ok")
}

#[derive(Serialize)]
struct Classified {
    index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<CaseLabel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn classify(ctx: &Ctx) -> Result<(), CliError> {
    let (cfg, mut run): (ClassifyConfig, _) = start(ctx, "classify")?;
    let mut out = vec![];
    let mut rows = vec![];
    for (index, law) in cfg.laws.iter().enumerate() {
        let res = tsirelson::classify(law);
        rows.push(match &res {
            Ok(CaseLabel::Case1) => vec![(index as u64).into(), "case1".into(), Cell::Empty, Cell::Empty, Cell::Empty],
            Ok(CaseLabel::Case2 { p, x }) => {
                vec![(index as u64).into(), "case2".into(), (*p).into(), x.num().into(), x.den().into()]
            }
            Ok(CaseLabel::Case3) => vec![(index as u64).into(), "case3".into(), Cell::Empty, Cell::Empty, Cell::Empty],
            Err(_) => vec![(index as u64).into(), "not_classifiable".into(), Cell::Empty, Cell::Empty, Cell::Empty],
        });
        out.push(match res {
            Ok(label) => Classified { index, label: Some(label), error: None },
            Err(e) => Classified { index, label: None, error: Some(e.to_string()) },
        });
    }
    run.csv("classify.csv", &["index", "case", "p", "x_num", "x_den"], rows)?;
    run.json("classify.json", &out)?;
    run.finish("ok")
}

pub fn reduce_event(ctx: &Ctx) -> Result<(), CliError> {
    let (cfg, mut run): (ReduceEventConfig, _) = start(ctx, "reduce-event")?;
    cfg.phi.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let ranks = cfg.ranks.expand()?;
    for &n in &ranks {
        cfg.event.check_rank(&cfg.phi, n).map_err(tsirelson_err)?;
    }
    let mode = match cfg.reduce {
        ReduceMode::MonteCarlo { samples, .. } => ReduceMode::MonteCarlo { samples, seed: derive_seed(run.seed(), &[u64::MAX]) },
        m => m,
    };
    let u_half_width = ReducedEvent::new(cfg.event.clone(), cfg.phi.clone(), mode).map_err(tsirelson_err)?.u_half_width(0.99);
    let test = tsirelson::reduce_event(&cfg.event, cfg.phi.clone(), mode).map_err(tsirelson_err)?;
    let nu = tsirelson::pushforward(&cfg.law);

    let mut rows = vec![];
    for &n in &ranks {
        let r = teststat::evaluate(&test, &cfg.law, n, &seeded(cfg.evaluator, run.seed(), n)).map_err(test_err)?;
        let mut row: Vec<Cell> = vec![n.into(), r.value.into(), r.half_width.into(), u_half_width.into()];
        match cfg.paths {
            Some(ev) => {
                let ev = match ev {
                    EventEvaluator::MonteCarlo { paths, conf, uniform, .. } => EventEvaluator::MonteCarlo {
                        paths,
                        conf,
                        seed: derive_seed(run.seed(), &[n, 1]),
                        uniform,
                    },
                    e => e,
                };
                let p = tsirelson::event_probability(&nu, &cfg.event, &cfg.phi, n, &ev).map_err(tsirelson_err)?;
                row.extend([p.value.into(), p.half_width.into()]);
            }
            None => row.extend([Cell::Empty, Cell::Empty]),
        }
        rows.push(row);
    }
    run.csv(
        "reduce_event.csv",
        &["n", "reduced_value", "reduced_half_width", "u_half_width_99", "path_value", "path_half_width"],
        rows,
    )?;
    run.finish("ok")
}

pub fn tv_demo(ctx: &Ctx) -> Result<(), CliError> {
    let (cfg, mut run): (TvDemoConfig, _) = start(ctx, "tv-demo")?;
    let mut rows = vec![];
    for &delta in &cfg.deltas {
        let mixed = mix_with_tail(&cfg.base, delta).map_err(|e| CliError::Config(e.to_string()))?;
        let (tv, err) = tv_distance_bounded(&cfg.base, &mixed);
        rows.push(vec![delta.into(), tv.into(), err.into(), cfg.n.into(), mixed.product_tv_bound(cfg.n).into()]);
    }
    run.csv("tv_demo.csv", &["delta", "tv", "tv_error", "n", "product_tv_bound"], rows)?;
    run.finish("ok")
}
