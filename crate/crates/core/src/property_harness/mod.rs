//! Mechanical checks of the execution guarantees: eager execution, streaming
//! progress with output maximality, rank descent with preservation, determinism,
//! and event-loop equivalence.
//!
//! Every case is generated from a case seed derived from `(seed, index)`, so a
//! failing case replays from the subject name and its case seed alone.

pub mod fixtures;
pub mod gen;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

use crate::core_model::{Collection, OpError, Operator};
use crate::graph_lang::{self, RunError};
use crate::scheduler::{self, Config, Schedule};
use fixtures::Subject;

/// Step budget for a single run to quiescence inside a check.
pub const SETTLE_BUDGET: usize = 100_000;

/// Default configuration cap for exhaustive exploration.
pub const DEFAULT_MAX_CONFIGS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Property {
    EagerExecution,
    StreamingProgress,
    OutputMaximality,
    RankDescent,
    Preservation,
    Determinism,
    EventLoopEquivalence,
}

impl Property {
    pub fn name(self) -> &'static str {
        match self {
            Property::EagerExecution => "EagerExecution",
            Property::StreamingProgress => "StreamingProgress",
            Property::OutputMaximality => "OutputMaximality",
            Property::RankDescent => "RankDescent",
            Property::Preservation => "Preservation",
            Property::Determinism => "Determinism",
            Property::EventLoopEquivalence => "EventLoopEquivalence",
        }
    }
}

/// A family of per-case checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Check {
    Eager,
    Progress,
    RankAndPreservation,
    Determinism,
    EventLoop,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Eager => "eager",
            Check::Progress => "progress",
            Check::RankAndPreservation => "rank",
            Check::Determinism => "determinism",
            Check::EventLoop => "event_loop",
        }
    }

    pub fn parse(s: &str) -> Option<Check> {
        Some(match s {
            "eager" => Check::Eager,
            "progress" => Check::Progress,
            "rank" | "preservation" => Check::RankAndPreservation,
            "determinism" => Check::Determinism,
            "event_loop" => Check::EventLoop,
            _ => return None,
        })
    }

    pub fn all_obligations() -> [Check; 3] {
        [Check::Eager, Check::Progress, Check::RankAndPreservation]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CaseOutcome {
    Pass,
    /// The case had nothing to check (for example, no step was enabled).
    Vacuous,
    Fail {
        property: Property,
        detail: String,
        /// Scripted schedules reproducing the failure, when schedules matter.
        schedules: Vec<Vec<usize>>,
    },
}

impl CaseOutcome {
    fn fail(property: Property, detail: impl Into<String>) -> CaseOutcome {
        CaseOutcome::Fail {
            property,
            detail: detail.into(),
            schedules: Vec::new(),
        }
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, CaseOutcome::Fail { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub subject: String,
    pub check: Check,
    pub property: Property,
    pub case_seed: u64,
    pub detail: String,
    pub schedules: Vec<Vec<usize>>,
}

impl Counterexample {
    pub fn to_json(&self) -> Json {
        json!({
            "subject": self.subject,
            "check": self.check.name(),
            "property": self.property.name(),
            "case_seed": self.case_seed,
            "detail": self.detail,
            "schedules": self.schedules,
        })
    }

    pub fn from_json(v: &Json) -> Option<Counterexample> {
        let prop = v.get("property")?.as_str()?;
        let property = [
            Property::EagerExecution,
            Property::StreamingProgress,
            Property::OutputMaximality,
            Property::RankDescent,
            Property::Preservation,
            Property::Determinism,
            Property::EventLoopEquivalence,
        ]
        .into_iter()
        .find(|p| p.name() == prop)?;
        let schedules = v
            .get("schedules")
            .and_then(Json::as_array)
            .map(|ss| {
                ss.iter()
                    .filter_map(|s| s.as_array().map(|xs| xs.iter().filter_map(|x| x.as_u64().map(|x| x as usize)).collect()))
                    .collect()
            })
            .unwrap_or_default();
        Some(Counterexample {
            subject: v.get("subject")?.as_str()?.to_string(),
            check: Check::parse(v.get("check")?.as_str()?)?,
            property,
            case_seed: v.get("case_seed")?.as_u64()?,
            detail: v.get("detail").and_then(Json::as_str).unwrap_or("").to_string(),
            schedules,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "Pass",
            Verdict::Fail => "Fail",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyReport {
    pub subject: String,
    pub check: Check,
    pub verdict: Verdict,
    pub cases: usize,
    pub vacuous: usize,
    /// Configurations visited by exhaustive exploration, summed over cases.
    pub configs: Option<usize>,
    pub warnings: Vec<String>,
    pub counterexample: Option<Counterexample>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> Json {
        json!({
            "subject": self.subject,
            "check": self.check.name(),
            "verdict": self.verdict.to_string(),
            "cases": self.cases,
            "vacuous": self.vacuous,
            "configs": self.configs,
            "warnings": self.warnings,
            "counterexample": self.counterexample.as_ref().map(Counterexample::to_json),
        })
    }
}

/// Options shared by all checks.
#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub cases: usize,
    pub seed: u64,
    pub max_configs: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            cases: 1000,
            seed: 0,
            max_configs: DEFAULT_MAX_CONFIGS,
        }
    }
}

pub fn case_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
}

/// Runs `check` on `opts.cases` cases, stopping at the first failure.
pub fn run_check(check: Check, s: &Subject, opts: &CheckOptions) -> PropertyReport {
    let mut report = PropertyReport {
        subject: s.name.clone(),
        check,
        verdict: Verdict::Pass,
        cases: 0,
        vacuous: 0,
        configs: (check == Check::Determinism).then_some(0),
        warnings: Vec::new(),
        counterexample: None,
    };
    for i in 0..opts.cases {
        let seed = case_seed(opts.seed, i);
        let (outcome, note) = run_case(check, s, seed, opts.max_configs);
        report.cases += 1;
        if let (Some(total), Some(n)) = (report.configs.as_mut(), note.configs) {
            *total += n;
        }
        if let Some(w) = note.warning {
            if report.warnings.len() < 5 {
                report.warnings.push(w);
            }
        }
        match outcome {
            CaseOutcome::Pass => {}
            CaseOutcome::Vacuous => report.vacuous += 1,
            CaseOutcome::Fail {
                property,
                detail,
                schedules,
            } => {
                report.verdict = Verdict::Fail;
                report.counterexample = Some(Counterexample {
                    subject: s.name.clone(),
                    check,
                    property,
                    case_seed: seed,
                    detail,
                    schedules,
                });
                break;
            }
        }
    }
    report
}

/// Side information from one case.
#[derive(Clone, Debug, Default)]
pub struct CaseNote {
    pub configs: Option<usize>,
    pub warning: Option<String>,
}

pub fn run_case(check: Check, s: &Subject, seed: u64, max_configs: usize) -> (CaseOutcome, CaseNote) {
    match check {
        Check::Eager => (eager_case(s, seed), CaseNote::default()),
        Check::Progress => (progress_case(s, seed), CaseNote::default()),
        Check::RankAndPreservation => (rank_case(s, seed), CaseNote::default()),
        Check::Determinism => determinism_case(s, seed, max_configs),
        Check::EventLoop => (event_loop_case(s, seed), CaseNote::default()),
    }
}

/// Re-executes the case behind a counterexample.
pub fn replay(s: &Subject, cx: &Counterexample, max_configs: usize) -> CaseOutcome {
    run_case(cx.check, s, cx.case_seed, max_configs).0
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn start(s: &Subject, ins: &[Collection]) -> Result<Config, OpError> {
    Ok(Config {
        graph: s.with_inputs(ins)?,
        outs: Collection::bottoms(&s.outputs),
    })
}

/// Runs to a stuck configuration, always taking the first enabled step.
pub fn settle(cfg: &Config) -> Result<Config, RunError> {
    let mut cfg = cfg.clone();
    for _ in 0..SETTLE_BUDGET {
        let Some(sc) = graph_lang::enabled_steps(&cfg.graph).into_iter().next() else {
            return Ok(cfg);
        };
        cfg = cfg.step(&sc)?.0;
    }
    Err(RunError::StepBudgetExceeded(SETTLE_BUDGET))
}

/// Runs to a stuck configuration under `schedule`, recording its picks.
pub fn settle_with(cfg: &Config, schedule: &mut Schedule) -> Result<(Config, Vec<usize>), RunError> {
    let mut cfg = cfg.clone();
    let mut picks = Vec::new();
    for _ in 0..SETTLE_BUDGET {
        let enabled = graph_lang::enabled_steps(&cfg.graph);
        if enabled.is_empty() {
            return Ok((cfg, picks));
        }
        let i = schedule.pick(enabled.len());
        picks.push(i);
        cfg = cfg.step(&enabled[i])?.0;
    }
    Err(RunError::StepBudgetExceeded(SETTLE_BUDGET))
}

fn show(cs: &[Collection]) -> String {
    let parts: Vec<String> = cs.iter().map(|c| crate::json::collection_to_json(c).to_string()).collect();
    format!("[{}]", parts.join(", "))
}

/// Takes up to three random steps, never one that leaves nothing enabled.
fn random_prefix(cfg: Config, rng: &mut impl Rng) -> Result<Config, OpError> {
    let mut cfg = cfg;
    for _ in 0..rng.gen_range(0..4) {
        let enabled = graph_lang::enabled_steps(&cfg.graph);
        if enabled.is_empty() {
            break;
        }
        let next = cfg.step(&enabled[rng.gen_range(0..enabled.len())])?.0;
        if graph_lang::is_stuck(&next.graph) {
            break;
        }
        cfg = next;
    }
    Ok(cfg)
}

/// Attempts at drawing inputs that enable at least one step.
const EAGER_DRAWS: usize = 8;

/// Eager execution: taking a step before a delta arrives or after it converges
/// to the same stuck configuration.
pub fn eager_case(s: &Subject, seed: u64) -> CaseOutcome {
    let p = crate::property_harness::Property::EagerExecution;
    let mut rng = rng(seed);
    let mut ins = gen::inputs(&s.inputs, false, false, &mut rng);
    for _ in 1..EAGER_DRAWS {
        match start(s, &ins) {
            Ok(c) if graph_lang::is_stuck(&c.graph) => ins = gen::inputs(&s.inputs, false, false, &mut rng),
            _ => break,
        }
    }
    let mut body = || -> Result<CaseOutcome, RunError> {
        let cfg = random_prefix(start(s, &ins)?, &mut rng)?;
        let enabled = graph_lang::enabled_steps(&cfg.graph);
        if enabled.is_empty() {
            return Ok(CaseOutcome::Vacuous);
        }
        let sc = &enabled[rng.gen_range(0..enabled.len())];
        let (stepped, _) = cfg.step(sc)?;
        let d = gen::deltas(&graph_lang::inputs(&cfg.graph), &s.inputs, &mut rng);
        let (Ok(after), Ok(before)) = (stepped.push(&d), cfg.push(&d)) else {
            return Ok(CaseOutcome::Vacuous);
        };
        let a = settle(&after)?;
        let b = settle(&before)?;
        if a == b {
            Ok(CaseOutcome::Pass)
        } else {
            Ok(CaseOutcome::fail(
                p,
                format!(
                    "inputs {}: stepping at {sc} before the delta gives outputs {}, after it {}",
                    show(&ins),
                    show(&a.outs),
                    show(&b.outs)
                ),
            ))
        }
    };
    body().unwrap_or_else(|e| CaseOutcome::fail(p, format!("run error: {e}")))
}

/// Streaming progress: with bounded inputs fixed, the stuck bounded outputs are
/// fixed; fixing every input then changes the outputs only by fixing them.
pub fn progress_case(s: &Subject, seed: u64) -> CaseOutcome {
    let mut rng = rng(seed);
    let ins = gen::inputs(&s.inputs, true, true, &mut rng);
    let body = || -> Result<CaseOutcome, RunError> {
        let first = settle(&start(s, &ins)?)?;
        for (j, t) in s.outputs.iter().enumerate() {
            if t.is_bounded() && !first.outs[j].is_fixed() {
                return Ok(CaseOutcome::fail(
                    Property::StreamingProgress,
                    format!("inputs {}: bounded output {j} is not fixed at {}", show(&ins), show(&first.outs)),
                ));
            }
        }
        let fixed: Vec<Collection> = ins.iter().map(Collection::fix).collect();
        let second = settle(&start(s, &fixed)?)?;
        let expect: Vec<Collection> = first.outs.iter().map(Collection::fix).collect();
        if second.outs == expect {
            Ok(CaseOutcome::Pass)
        } else {
            Ok(CaseOutcome::fail(
                Property::OutputMaximality,
                format!(
                    "inputs {}: output {} withholds content; with fixed inputs it is {}",
                    show(&ins),
                    show(&first.outs),
                    show(&second.outs)
                ),
            ))
        }
    };
    body().unwrap_or_else(|e| CaseOutcome::fail(Property::StreamingProgress, format!("run error: {e}")))
}

/// Rank descent and preservation along a random trace of steps and deltas.
pub fn rank_case(s: &Subject, seed: u64) -> CaseOutcome {
    let mut rng = rng(seed);
    let ins = gen::inputs(&s.inputs, false, false, &mut rng);
    let mut body = || -> Result<CaseOutcome, OpError> {
        let mut cfg = start(s, &ins)?;
        let mut steps = 0;
        for _ in 0..40 {
            let enabled = graph_lang::enabled_steps(&cfg.graph);
            if enabled.is_empty() || rng.gen_bool(0.25) {
                let d = gen::deltas(&graph_lang::inputs(&cfg.graph), &s.inputs, &mut rng);
                if let Ok(next) = cfg.push(&d) {
                    cfg = next;
                }
            } else {
                let sc = &enabled[rng.gen_range(0..enabled.len())];
                let before = graph_lang::graph_rank(&cfg.graph);
                let (next, st) = cfg.step(sc)?;
                let after = graph_lang::graph_rank(&next.graph);
                if after >= before {
                    return Ok(CaseOutcome::fail(
                        Property::RankDescent,
                        format!("step {steps} at {sc} ({}) moved rank {:?} to {:?}", st.op, before.0, after.0),
                    ));
                }
                cfg = next;
                steps += 1;
            }
            if let Some(why) = preservation_violation(s, &cfg) {
                return Ok(CaseOutcome::fail(Property::Preservation, format!("after {steps} steps: {why}")));
            }
        }
        Ok(if steps == 0 { CaseOutcome::Vacuous } else { CaseOutcome::Pass })
    };
    body().unwrap_or_else(|e| CaseOutcome::fail(Property::Preservation, format!("step error: {e}")))
}

fn preservation_violation(s: &Subject, cfg: &Config) -> Option<String> {
    let ins = graph_lang::inputs(&cfg.graph);
    if !Collection::all_members(&ins, &s.inputs) {
        return Some(format!("inputs {} left their types", show(&ins)));
    }
    if !Collection::all_members(&cfg.outs, &s.outputs) {
        return Some(format!("outputs {} left their types", show(&cfg.outs)));
    }
    if s.typed {
        match graph_lang::typecheck_open(&cfg.graph, &s.inputs) {
            Ok(outs) if outs == s.outputs => {}
            Ok(outs) => return Some(format!("graph type changed to {outs:?}")),
            Err(e) => return Some(format!("graph no longer typechecks: {e}")),
        }
    }
    None
}

/// Number of random schedules compared when exploration hits its cap.
pub const SAMPLED_SCHEDULES: usize = 16;

/// Determinism: every schedule from the start configuration reaches the same
/// stuck configuration. Exhaustive up to `max_configs`, sampled beyond.
pub fn determinism_case(s: &Subject, seed: u64, max_configs: usize) -> (CaseOutcome, CaseNote) {
    let (cfg, ins) = match determinism_start(s, seed) {
        Ok(c) => c,
        Err(e) => return (CaseOutcome::fail(Property::Determinism, e.to_string()), CaseNote::default()),
    };
    determinism_from(&cfg, &ins, seed, max_configs)
}

/// Start configuration of a determinism case, for replaying its schedules.
pub fn determinism_start(s: &Subject, seed: u64) -> Result<(Config, Vec<Collection>), OpError> {
    let mut rng = rng(seed);
    let ins = fixtures::small_inputs(&s.inputs, &mut rng);
    Ok((start(s, &ins)?, ins))
}

pub fn determinism_from(cfg: &Config, ins: &[Collection], seed: u64, max_configs: usize) -> (CaseOutcome, CaseNote) {
    let mut note = CaseNote::default();
    let ex = match scheduler::explore(cfg, max_configs) {
        Ok(ex) => ex,
        Err(e) => return (CaseOutcome::fail(Property::Determinism, format!("step error: {e}")), note),
    };
    note.configs = Some(ex.configs);
    if ex.complete {
        let outcome = match ex.stuck.as_slice() {
            [_] => CaseOutcome::Pass,
            [] => CaseOutcome::fail(Property::Determinism, "no stuck configuration reached"),
            [(a, pa), (b, pb), ..] => CaseOutcome::Fail {
                property: Property::Determinism,
                detail: format!(
                    "inputs {}: {} stuck configurations; two of them output {} and {}",
                    show(ins),
                    ex.stuck.len(),
                    show(&a.outs),
                    show(&b.outs)
                ),
                schedules: vec![pa.clone(), pb.clone()],
            },
        };
        return (outcome, note);
    }
    note.warning = Some(format!(
        "exploration cap {max_configs} reached; compared {SAMPLED_SCHEDULES} random schedules instead"
    ));
    let mut first: Option<(Config, Vec<usize>)> = None;
    for k in 0..SAMPLED_SCHEDULES {
        let mut sch = Schedule::random(case_seed(seed, k));
        let run = match settle_with(cfg, &mut sch) {
            Ok(r) => r,
            Err(e) => return (CaseOutcome::fail(Property::Determinism, format!("run error: {e}")), note),
        };
        match &first {
            None => first = Some(run),
            Some((c0, p0)) if *c0 != run.0 => {
                let outcome = CaseOutcome::Fail {
                    property: Property::Determinism,
                    detail: format!("inputs {}: schedules disagree: {} vs {}", show(ins), show(&c0.outs), show(&run.0.outs)),
                    schedules: vec![p0.clone(), run.1],
                };
                return (outcome, note);
            }
            Some(_) => {}
        }
    }
    (CaseOutcome::Pass, note)
}

/// Event-loop equivalence on generated inputs.
pub fn event_loop_case(s: &Subject, seed: u64) -> CaseOutcome {
    let mut r = rng(seed);
    let ins = gen::inputs(&s.inputs, true, true, &mut r);
    event_loop_with(s, &ins, seed)
}

/// Feeding `ins` in random chunks with random step budgets and drains gives the
/// same totals as feeding them at once.
pub fn event_loop_with(s: &Subject, ins: &[Collection], seed: u64) -> CaseOutcome {
    let p = s.program();
    let mut r = rng(seed ^ 0x5EED);
    let base = match scheduler::run_once(&p, ins, &mut Schedule::round_robin()) {
        Ok(res) => res.outputs,
        Err(e) => return CaseOutcome::fail(Property::EventLoopEquivalence, format!("run error: {e}")),
    };
    let trace = scheduler::random_trace(ins, &mut r);
    match scheduler::run_trace(&p, &trace, &mut Schedule::random(r.gen()), false) {
        Ok(res) if res.outputs == base => CaseOutcome::Pass,
        Ok(res) => CaseOutcome::fail(
            Property::EventLoopEquivalence,
            format!("inputs {}: one batch gives {}, chunked gives {}", show(ins), show(&base), show(&res.outputs)),
        ),
        Err(e) => CaseOutcome::fail(Property::EventLoopEquivalence, format!("run error: {e}")),
    }
}

/// Name of the operator at the root of a single-node subject, for reporting.
pub fn root_op_name(s: &Subject) -> Option<&'static str> {
    match &s.graph {
        graph_lang::GraphExpr::Node { op, .. } => Some(op.name()),
        _ => None,
    }
}

#[cfg(test)]
mod tests;
