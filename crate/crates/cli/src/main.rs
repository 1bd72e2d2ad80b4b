//! `flo`: typecheck, run, check, explore and replay dataflow graph files.
//!
//! Every command prints one JSON document on stdout; diagnostics go to stderr.
//! Exit codes: 0 success or Pass, 1 type error or property failure, 2 usage,
//! I/O or parse error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use flo_core::json::{self as fj, LoadError};
use flo_core::property_harness::fixtures::{self, Subject};
use flo_core::property_harness::{
    self as ph, CaseOutcome, Check, CheckOptions, Counterexample, PropertyReport, DEFAULT_MAX_CONFIGS,
};
use flo_core::scheduler::{self, Program, Schedule};
use flo_core::{graph_lang, Collection};

const MAX_CONFIGS_ENV: &str = "FLO_MAX_CONFIGS";

#[derive(Parser)]
#[command(name = "flo", version, about = "Boundedness-typed streaming dataflow graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Infer the interface of a graph file.
    Typecheck { graph: PathBuf },
    /// Execute a graph file on an event-loop trace.
    Run {
        graph: PathBuf,
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = SchedKind::RoundRobin)]
        schedule: SchedKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include the per-event log in the output.
        #[arg(long)]
        log: bool,
    },
    /// Check execution properties of a graph file or a built-in subject.
    Check {
        #[arg(required_unless_present_any = ["operator", "list"], conflicts_with = "operator")]
        graph: Option<PathBuf>,
        /// Built-in subject name, for example `scan` or `to_sequence_naive`.
        #[arg(long)]
        operator: Option<String>,
        /// One of eager, progress, rank, determinism, event_loop.
        #[arg(long)]
        property: Option<String>,
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Explore every interleaving (the determinism check).
        #[arg(long)]
        exhaustive: bool,
        #[arg(long)]
        max_configs: Option<usize>,
        /// Print the built-in subject names and exit.
        #[arg(long)]
        list: bool,
    },
    /// Enumerate every stuck configuration reachable from whole inputs.
    Explore {
        graph: PathBuf,
        /// JSON array with one collection per input; small random inputs otherwise.
        inputs: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_configs: Option<usize>,
    },
    /// Re-execute the case behind a counterexample or a failing report.
    Replay { counterexample: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchedKind {
    RoundRobin,
    Random,
    First,
}

/// A command failure: exit code and stderr diagnostic.
struct Exit {
    code: u8,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Exit {
    Exit { code: 2, msg: msg.into() }
}

fn failure(msg: impl Into<String>) -> Exit {
    Exit { code: 1, msg: msg.into() }
}

impl From<LoadError> for Exit {
    fn from(e: LoadError) -> Exit {
        match e {
            LoadError::Parse(p) => usage(p.to_string()),
            LoadError::Type(t) => failure(t.to_string()),
        }
    }
}

/// Result of a command: the JSON document and whether it reports a failure.
struct Outcome {
    doc: Json,
    failed: bool,
}

impl Outcome {
    fn ok(doc: Json) -> Outcome {
        Outcome { doc, failed: false }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(out) => {
            let text = serde_json::to_string_pretty(&out.doc).expect("JSON values serialize");
            // A closed stdout (for example `| head`) is not an error of the command.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::from(u8::from(out.failed))
        }
        Err(e) => {
            eprintln!("flo: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<Outcome, Exit> {
    match cmd {
        Cmd::Typecheck { graph } => typecheck(&graph),
        Cmd::Run {
            graph,
            trace,
            schedule,
            seed,
            log,
        } => run(&graph, &trace, schedule, seed, log),
        Cmd::Check {
            graph,
            operator,
            property,
            cases,
            seed,
            exhaustive,
            max_configs,
            list,
        } => {
            if list {
                return Ok(Outcome::ok(json!({ "subjects": fixtures::subject_names() })));
            }
            let (subject, source) = match (graph, operator) {
                (Some(path), _) => {
                    let doc = read_json(&path)?;
                    (subject_from_file(&path, &doc)?, Some(doc))
                }
                (None, Some(name)) => (builtin(&name)?, None),
                (None, None) => return Err(usage("check needs a graph file or --operator")),
            };
            let opts = CheckOptions {
                cases,
                seed,
                max_configs: max_configs_or_env(max_configs)?,
            };
            check(&subject, source.as_ref(), property.as_deref(), exhaustive, &opts)
        }
        Cmd::Explore {
            graph,
            inputs,
            seed,
            max_configs,
        } => explore(&graph, inputs.as_deref(), seed, max_configs_or_env(max_configs)?),
        Cmd::Replay { counterexample } => replay(&counterexample),
    }
}

fn read_json(path: &Path) -> Result<Json, Exit> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("ParseError at {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Program, Exit> {
    Ok(fj::load_program(&read_json(path)?)?)
}

fn max_configs_or_env(flag: Option<usize>) -> Result<usize, Exit> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(MAX_CONFIGS_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| usage(format!("{MAX_CONFIGS_ENV} must be a non-negative integer, found {s:?}"))),
        Err(_) => Ok(DEFAULT_MAX_CONFIGS),
    }
}

fn types_json(ts: &[flo_core::StreamType]) -> Json {
    ts.iter().map(ToString::to_string).collect()
}

fn typecheck(path: &Path) -> Result<Outcome, Exit> {
    let p = load(path)?;
    Ok(Outcome::ok(json!({
        "inputs": types_json(&p.inputs),
        "outputs": types_json(&p.outputs),
        "signature": fj::signature_text(&p.inputs, &p.outputs),
    })))
}

fn run(graph: &Path, trace: &Path, kind: SchedKind, seed: u64, log: bool) -> Result<Outcome, Exit> {
    let p = load(graph)?;
    let events = fj::trace_from_json(&read_json(trace)?, &p.inputs).map_err(|e| usage(e.to_string()))?;
    let mut schedule = match kind {
        SchedKind::RoundRobin => Schedule::round_robin(),
        SchedKind::Random => Schedule::random(seed),
        SchedKind::First => Schedule::scripted(Vec::new()),
    };
    let r = scheduler::run_trace(&p, &events, &mut schedule, log).map_err(|e| failure(e.to_string()))?;
    let mut doc = json!({ "outputs": fj::collections_to_json(&r.outputs), "steps": r.steps });
    if log {
        let lines: Vec<Json> = r.log.iter().map(|l| serde_json::from_str(l).expect("log lines are JSON")).collect();
        doc["log"] = Json::Array(lines);
    }
    Ok(Outcome::ok(doc))
}

fn builtin(name: &str) -> Result<Subject, Exit> {
    fixtures::subject(name).ok_or_else(|| {
        usage(format!(
            "unknown subject {name:?}; known: {}",
            fixtures::subject_names().join(", ")
        ))
    })
}

fn subject_from_file(path: &Path, doc: &Json) -> Result<Subject, Exit> {
    let p = fj::load_program(doc)?;
    let name = path.file_stem().map_or_else(|| "graph".into(), |s| s.to_string_lossy().into_owned());
    Ok(Subject::from_program(&name, p))
}

fn check(
    s: &Subject,
    source: Option<&Json>,
    property: Option<&str>,
    exhaustive: bool,
    opts: &CheckOptions,
) -> Result<Outcome, Exit> {
    let checks: Vec<Check> = match property {
        Some(name) => vec![Check::parse(name).ok_or_else(|| {
            usage(format!("unknown property {name:?}; expected eager, progress, rank, determinism or event_loop"))
        })?],
        None if exhaustive => vec![Check::Determinism],
        None => Check::all_obligations().to_vec(),
    };
    if exhaustive && checks != [Check::Determinism] {
        return Err(usage("--exhaustive applies only to the determinism property"));
    }
    let reports: Vec<PropertyReport> = checks.iter().map(|&c| ph::run_check(c, s, opts)).collect();
    let failed = reports.iter().any(|r| !r.passed());
    let reports: Vec<Json> = reports
        .iter()
        .map(|r| {
            let mut j = r.to_json();
            // File subjects are not registered, so the counterexample carries its graph.
            if let (Some(src), Some(cx)) = (source, j.get_mut("counterexample").filter(|c| !c.is_null())) {
                cx["graph_file"] = src.clone();
            }
            j
        })
        .collect();
    Ok(Outcome {
        doc: json!({
            "subject": s.name,
            "verdict": if failed { "Fail" } else { "Pass" },
            "reports": reports,
        }),
        failed,
    })
}

fn explore(graph: &Path, inputs: Option<&Path>, seed: u64, max_configs: usize) -> Result<Outcome, Exit> {
    let p = load(graph)?;
    let ins: Vec<Collection> = match inputs {
        Some(path) => {
            let doc = read_json(path)?;
            let arr = doc
                .as_array()
                .filter(|a| a.len() == p.inputs.len())
                .ok_or_else(|| usage(format!("inputs must be an array of {} collections", p.inputs.len())))?;
            arr.iter()
                .zip(&p.inputs)
                .enumerate()
                .map(|(i, (c, t))| fj::collection_from_json(c, &t.collection, &format!("$[{i}]")))
                .collect::<Result<_, _>>()
                .map_err(|e| usage(e.to_string()))?
        }
        None => {
            use rand::SeedableRng;
            fixtures::small_inputs(&p.inputs, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))
        }
    };
    let batch: Vec<_> = ins.iter().map(Collection::as_delta).collect();
    let start = p.start().push(&batch).map_err(|e| failure(e.to_string()))?;
    let ex = scheduler::explore(&start, max_configs).map_err(|e| failure(e.to_string()))?;
    let stuck: Vec<Json> = ex
        .stuck
        .iter()
        .map(|(cfg, path)| json!({ "outputs": fj::collections_to_json(&cfg.outs), "schedule": path }))
        .collect();
    let confluent = ex.stuck.len() <= 1;
    if !ex.complete {
        eprintln!("flo: exploration stopped at {max_configs} configurations");
    }
    Ok(Outcome {
        doc: json!({
            "inputs": fj::collections_to_json(&ins),
            "configs": ex.configs,
            "complete": ex.complete,
            "confluent": confluent,
            "stuck": stuck,
        }),
        failed: !confluent,
    })
}

/// Finds a counterexample in a counterexample object, a report, or `check` output.
fn find_counterexample(doc: &Json) -> Option<&Json> {
    if doc.get("property").is_some() && doc.get("case_seed").is_some() {
        return Some(doc);
    }
    if let Some(cx) = doc.get("counterexample").filter(|c| !c.is_null()) {
        return Some(cx);
    }
    doc.get("reports")?.as_array()?.iter().find_map(find_counterexample)
}

fn replay(path: &Path) -> Result<Outcome, Exit> {
    let doc = read_json(path)?;
    let raw = find_counterexample(&doc).ok_or_else(|| usage("NotACounterexample: the file reports no failure"))?;
    let cx = Counterexample::from_json(raw).ok_or_else(|| usage("ParseError at counterexample: malformed counterexample"))?;
    let s = match raw.get("graph_file") {
        Some(src) => subject_from_file(Path::new(&cx.subject), src)?,
        None => builtin(&cx.subject)?,
    };
    let max_configs = max_configs_or_env(None)?;
    let outcome = ph::replay(&s, &cx, max_configs);
    let schedules = cx
        .schedules
        .iter()
        .map(|script| schedule_steps(&s, cx.case_seed, script))
        .collect::<Result<Vec<_>, _>>()?;
    let mut doc = json!({
        "subject": cx.subject,
        "check": cx.check.name(),
        "case_seed": cx.case_seed,
        "recorded": { "property": cx.property.name(), "detail": cx.detail },
        "schedules": schedules,
    });
    let failed = match &outcome {
        CaseOutcome::Fail { property, detail, .. } => {
            doc["verdict"] = "Fail".into();
            doc["replayed"] = json!({ "property": property.name(), "detail": detail });
            true
        }
        CaseOutcome::Pass | CaseOutcome::Vacuous => {
            doc["verdict"] = "Pass".into();
            doc["note"] = "the counterexample no longer reproduces".into();
            false
        }
    };
    Ok(Outcome { doc, failed })
}

/// Re-executes one recorded schedule of a determinism case, listing the output
/// deltas of every step.
fn schedule_steps(s: &Subject, case_seed: u64, script: &[usize]) -> Result<Json, Exit> {
    let (mut cfg, ins) = ph::determinism_start(s, case_seed).map_err(|e| failure(e.to_string()))?;
    let mut sch = Schedule::scripted(script.to_vec());
    let mut steps = Vec::new();
    for _ in 0..ph::SETTLE_BUDGET {
        let enabled = graph_lang::enabled_steps(&cfg.graph);
        if enabled.is_empty() {
            break;
        }
        let sc = &enabled[sch.pick(enabled.len())];
        let (next, st) = cfg.step(sc).map_err(|e| failure(e.to_string()))?;
        steps.push(json!({
            "at": sc.to_string(),
            "op": st.op,
            "deltas": st.deltas.iter().map(fj::delta_to_json).collect::<Vec<_>>(),
        }));
        cfg = next;
    }
    Ok(json!({
        "inputs": fj::collections_to_json(&ins),
        "steps": steps,
        "outputs": fj::collections_to_json(&cfg.outs),
    }))
}
