//! Running graphs: schedules over enabled steps, an event loop that interleaves
//! input batches with steps and output drains, and exhaustive exploration.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::core_model::{Collection, Delta, OpError, StreamType, TypeError};
use crate::graph_lang::{self, GraphExpr, RunError, StepChoice};
use crate::nested_streams::{NestedDelta, NestedOp, NestedSeqValue};
use crate::stdlib_lvar::LVarValue;
use crate::stdlib_seq::SeqValue;
use crate::stdlib_sets::SetValue;
use crate::IntZSet;

/// Default step budget for runs to quiescence.
pub const MAX_STEPS: usize = 1_000_000;

/// A typechecked top-level graph with its interface.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub graph: GraphExpr,
    pub inputs: Vec<StreamType>,
    pub outputs: Vec<StreamType>,
}

impl Program {
    pub fn new(g: &GraphExpr, inputs: Vec<StreamType>) -> Result<Program, TypeError> {
        let (graph, outputs) = graph_lang::check_top(g, &inputs)?;
        Ok(Program {
            graph,
            inputs,
            outputs,
        })
    }

    /// The initial configuration: the graph and empty outputs.
    pub fn start(&self) -> Config {
        Config {
            graph: self.graph.clone(),
            outs: Collection::bottoms(&self.outputs),
        }
    }
}

/// A graph together with everything its outputs have produced so far.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Config {
    pub graph: GraphExpr,
    pub outs: Vec<Collection>,
}

impl Config {
    pub fn step(&self, sc: &StepChoice) -> Result<(Config, graph_lang::GraphStep), OpError> {
        let s = graph_lang::step_graph(&self.graph, sc)?;
        let outs = Collection::concat_all(&self.outs, &s.deltas)?;
        Ok((
            Config {
                graph: s.graph.clone(),
                outs,
            },
            s,
        ))
    }

    pub fn push(&self, batch: &[Delta]) -> Result<Config, OpError> {
        Ok(Config {
            graph: graph_lang::push_inputs(&self.graph, batch)?,
            outs: self.outs.clone(),
        })
    }

    pub fn is_stuck(&self) -> bool {
        graph_lang::is_stuck(&self.graph)
    }
}

/// How the next step is picked among the enabled ones.
#[derive(Clone, Debug)]
pub enum Schedule {
    /// Step counter modulo the number of enabled steps.
    RoundRobin { counter: usize },
    Random(ChaCha8Rng),
    /// Indices into the enabled list; the first enabled step once exhausted.
    Scripted { script: Vec<usize>, pos: usize },
}

impl Schedule {
    pub fn round_robin() -> Schedule {
        Schedule::RoundRobin { counter: 0 }
    }

    pub fn random(seed: u64) -> Schedule {
        Schedule::Random(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn scripted(script: Vec<usize>) -> Schedule {
        Schedule::Scripted { script, pos: 0 }
    }

    /// Index into a non-empty list of `n` enabled steps.
    pub fn pick(&mut self, n: usize) -> usize {
        match self {
            Schedule::RoundRobin { counter } => {
                let i = *counter % n;
                *counter += 1;
                i
            }
            Schedule::Random(rng) => rng.gen_range(0..n),
            Schedule::Scripted { script, pos } => {
                let i = script.get(*pos).copied().unwrap_or(0);
                *pos += 1;
                i.min(n - 1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepLimit {
    Steps(usize),
    /// Until stuck.
    Max,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DrainPolicy {
    None,
    All,
    /// At most this many content units per output.
    Prefix(usize),
    /// A uniformly random number of content units per output.
    RandomPortion(u64),
}

/// One event-loop iteration: push a batch, take steps, drain outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub batch: Vec<Delta>,
    pub steps: StepLimit,
    pub drain: DrainPolicy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub config: Config,
    /// Drained totals recombined with what is still pending.
    pub outputs: Vec<Collection>,
    pub steps: usize,
    /// One JSON object per line: batches, steps, and drains.
    pub log: Vec<String>,
}

/// Splits a pending output into a drainable prefix of at most `n` content units
/// (all when `None`) and the remainder. Nested outputs keep their open leftmost
/// tuple; lattice outputs drain only as a whole once fixed. The terminator always
/// stays with the remainder.
pub fn drain(c: &Collection, n: Option<usize>) -> (Delta, Collection) {
    let n = n.unwrap_or(usize::MAX);
    match c {
        Collection::Seq(s) => {
            let k = n.min(s.items.len());
            let split = s.items.len() - k;
            let taken = SeqValue::new(s.items[split..].to_vec(), false);
            let rest = SeqValue::new(s.items[..split].to_vec(), s.terminated);
            (Delta::Seq(taken), Collection::Seq(rest))
        }
        Collection::Set(s) => {
            let taken: Vec<_> = s.elems.iter().take(n).cloned().collect();
            let mut rest = s.clone();
            for v in &taken {
                rest.elems.remove(v);
            }
            (Delta::Set(SetValue::of(taken, false)), Collection::Set(rest))
        }
        Collection::ZSet(z) => {
            let taken: Vec<_> = z.cards.iter().take(n).map(|(k, w)| (k.clone(), *w)).collect();
            let mut rest = z.clone();
            for (k, _) in &taken {
                rest.cards.remove(k);
            }
            (Delta::ZSet(IntZSet::from_pairs(taken, false)), Collection::ZSet(rest))
        }
        Collection::LVar(l) if l.fixed && n > 0 => (
            Delta::LVar(LVarValue::new(l.lattice.clone(), l.value.clone(), false)),
            Collection::LVar(LVarValue::new(l.lattice.clone(), l.lattice.bottom(), true)),
        ),
        Collection::Nat(s) if n > 0 && s.value.is_some() => c.take_content().unwrap_or((Delta::Empty, c.clone())),
        Collection::Nested(v) => {
            let open = usize::from(!v.terminated && !v.tuples.is_empty());
            let k = n.min(v.tuples.len() - open);
            let split = v.tuples.len() - k;
            let ops = v.tuples[split..].iter().rev().map(|t| NestedOp::Push(t.clone())).collect();
            let rest = NestedSeqValue {
                tuples: v.tuples[..split].to_vec(),
                ..v.clone()
            };
            (
                Delta::Nested(NestedDelta { ops, end: false }),
                Collection::Nested(rest),
            )
        }
        other => (Delta::Empty, other.clone()),
    }
}

/// Runs an event-loop trace. Outputs are drained into totals as the trace
/// directs; the result recombines totals with what is still pending.
pub fn run_trace(p: &Program, trace: &[TraceEvent], schedule: &mut Schedule, with_log: bool) -> Result<RunResult, RunError> {
    let mut cfg = p.start();
    let mut totals = Collection::bottoms(&p.outputs);
    let mut log = Vec::new();
    let mut steps = 0usize;
    let mut drain_rng: Option<ChaCha8Rng> = None;
    for (i, ev) in trace.iter().enumerate() {
        cfg = cfg.push(&ev.batch)?;
        if with_log {
            log.push(json!({"event": "batch", "index": i}).to_string());
        }
        let limit = match ev.steps {
            StepLimit::Steps(n) => n,
            StepLimit::Max => MAX_STEPS,
        };
        let mut taken = 0;
        while taken < limit {
            let enabled = graph_lang::enabled_steps(&cfg.graph);
            if enabled.is_empty() {
                break;
            }
            let sc = &enabled[schedule.pick(enabled.len())];
            let (next, s) = cfg.step(sc)?;
            if with_log {
                log.push(
                    json!({
                        "event": "step",
                        "step": steps,
                        "at": sc.to_string(),
                        "rules": s.rules,
                        "op": s.op,
                    })
                    .to_string(),
                );
            }
            cfg = next;
            taken += 1;
            steps += 1;
        }
        if ev.steps == StepLimit::Max && !cfg.is_stuck() {
            return Err(RunError::StepBudgetExceeded(MAX_STEPS));
        }
        for (j, out) in cfg.outs.clone().iter().enumerate() {
            let n = match &ev.drain {
                DrainPolicy::None => continue,
                DrainPolicy::All => None,
                DrainPolicy::Prefix(n) => Some(*n),
                DrainPolicy::RandomPortion(seed) => {
                    let rng = drain_rng.get_or_insert_with(|| ChaCha8Rng::seed_from_u64(*seed));
                    Some(rng.gen_range(0..=out.content_size()))
                }
            };
            let (d, rest) = drain(out, n);
            totals[j] = totals[j].concat(&d).map_err(OpError::from)?;
            cfg.outs[j] = rest;
        }
        if with_log && ev.drain != DrainPolicy::None {
            log.push(json!({"event": "drain", "index": i}).to_string());
        }
    }
    let outputs = totals
        .iter()
        .zip(&cfg.outs)
        .map(|(t, o)| t.concat(&o.as_delta()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(OpError::from)?;
    Ok(RunResult {
        config: cfg,
        outputs,
        steps,
        log,
    })
}

/// Pushes whole input values in one batch and runs to quiescence.
pub fn run_once(p: &Program, inputs: &[Collection], schedule: &mut Schedule) -> Result<RunResult, RunError> {
    let batch: Vec<Delta> = inputs.iter().map(Collection::as_delta).collect();
    let trace = [TraceEvent {
        batch,
        steps: StepLimit::Max,
        drain: DrainPolicy::None,
    }];
    run_trace(p, &trace, schedule, false)
}

/// Outcome of exploring every interleaving from one configuration.
#[derive(Clone, Debug)]
pub struct Exploration {
    /// Distinct configurations visited.
    pub configs: usize,
    /// Distinct stuck configurations reached, each with a schedule reaching it
    /// as indices into the successive enabled lists.
    pub stuck: Vec<(Config, Vec<usize>)>,
    /// False when the cap stopped the search early.
    pub complete: bool,
}

/// Breadth-first search over all schedules, deduplicating configurations.
pub fn explore(start: &Config, max_configs: usize) -> Result<Exploration, OpError> {
    let mut seen: HashMap<Config, usize> = HashMap::new();
    // parent[id] = (parent id, enabled index taken from it)
    let mut parent: Vec<Option<(usize, usize)>> = vec![None];
    let mut stuck = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone(), 0);
    queue.push_back((start.clone(), 0usize));
    let path = |parent: &[Option<(usize, usize)>], mut id: usize| {
        let mut p = Vec::new();
        while let Some((up, i)) = parent[id] {
            p.push(i);
            id = up;
        }
        p.reverse();
        p
    };
    while let Some((cfg, id)) = queue.pop_front() {
        let enabled = graph_lang::enabled_steps(&cfg.graph);
        if enabled.is_empty() {
            let p = path(&parent, id);
            stuck.push((cfg, p));
            continue;
        }
        for (i, sc) in enabled.iter().enumerate() {
            let (next, _) = cfg.step(sc)?;
            if seen.contains_key(&next) {
                continue;
            }
            if seen.len() >= max_configs {
                return Ok(Exploration {
                    configs: seen.len(),
                    stuck,
                    complete: false,
                });
            }
            let nid = parent.len();
            parent.push(Some((id, i)));
            seen.insert(next.clone(), nid);
            queue.push_back((next, nid));
        }
    }
    Ok(Exploration {
        configs: seen.len(),
        stuck,
        complete: true,
    })
}

/// Follows a scripted schedule to quiescence, returning the stuck configuration.
pub fn run_schedule(start: &Config, script: &[usize], budget: usize) -> Result<Config, RunError> {
    let mut cfg = start.clone();
    let mut sch = Schedule::scripted(script.to_vec());
    for _ in 0..budget {
        let enabled = graph_lang::enabled_steps(&cfg.graph);
        if enabled.is_empty() {
            return Ok(cfg);
        }
        cfg = cfg.step(&enabled[sch.pick(enabled.len())])?.0;
    }
    Err(RunError::StepBudgetExceeded(budget))
}

/// Splits a whole value into a random sequence of deltas whose concatenation
/// onto bottom gives the value back. The terminator rides on the last delta.
pub fn random_chunks(c: &Collection, rng: &mut impl Rng, max_chunks: usize) -> Vec<Delta> {
    let n = rng.gen_range(1..=max_chunks.max(1));
    let mut chunks = vec![Vec::new(); n];
    let mut out: Vec<Delta> = match c {
        Collection::Seq(s) => {
            let mut cuts: Vec<usize> = (0..n - 1).map(|_| rng.gen_range(0..=s.items.len())).collect();
            cuts.sort_unstable();
            let arrivals: Vec<_> = s.arrivals().cloned().collect();
            let mut prev = 0;
            let mut ds = Vec::new();
            for cut in cuts.into_iter().chain([arrivals.len()]) {
                ds.push(Delta::Seq(SeqValue::from_arrivals(arrivals[prev..cut].to_vec(), false)));
                prev = cut;
            }
            ds
        }
        Collection::Set(s) => {
            for v in &s.elems {
                chunks[rng.gen_range(0..n)].push(v.clone());
            }
            chunks.into_iter().map(|vs| Delta::Set(SetValue::of(vs, false))).collect()
        }
        Collection::ZSet(z) => {
            let mut parts = vec![IntZSet::default(); n];
            for (k, w) in &z.cards {
                // Split a weight across two chunks so partial cancellation is exercised.
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                let x = rng.gen_range(-2..=2);
                parts[a].add_weight(k.clone(), x);
                parts[b].add_weight(k.clone(), *w - x);
            }
            parts.into_iter().map(Delta::ZSet).collect()
        }
        Collection::Nested(v) => {
            let tuples: Vec<_> = v.tuples.iter().rev().cloned().collect();
            let mut cuts: Vec<usize> = (0..n - 1).map(|_| rng.gen_range(0..=tuples.len())).collect();
            cuts.sort_unstable();
            let mut prev = 0;
            let mut ds = Vec::new();
            for cut in cuts.into_iter().chain([tuples.len()]) {
                let ops = tuples[prev..cut].iter().cloned().map(NestedOp::Push).collect();
                ds.push(Delta::Nested(NestedDelta { ops, end: false }));
                prev = cut;
            }
            ds
        }
        other => {
            let (d, _) = other.take_content().unwrap_or((Delta::Empty, other.clone()));
            vec![d]
        }
    };
    if c.is_fixed() {
        out.push(Delta::End);
    }
    out
}

/// A randomized trace that feeds `inputs` in chunks, each followed by a random
/// number of steps and a random drain; the last event runs to quiescence.
pub fn random_trace(inputs: &[Collection], rng: &mut impl Rng) -> Vec<TraceEvent> {
    let per_input: Vec<Vec<Delta>> = inputs.iter().map(|c| random_chunks(c, rng, 4)).collect();
    let len = per_input.iter().map(Vec::len).max().unwrap_or(0);
    let mut events = Vec::new();
    for i in 0..len {
        let batch = per_input.iter().map(|ds| ds.get(i).cloned().unwrap_or(Delta::Empty)).collect();
        let drain = match rng.gen_range(0..4) {
            0 => DrainPolicy::None,
            1 => DrainPolicy::All,
            2 => DrainPolicy::Prefix(rng.gen_range(0..3)),
            _ => DrainPolicy::RandomPortion(rng.gen()),
        };
        events.push(TraceEvent {
            batch,
            steps: StepLimit::Steps(rng.gen_range(0..6)),
            drain,
        });
    }
    events.push(TraceEvent {
        batch: Delta::empties(inputs.len()),
        steps: StepLimit::Max,
        drain: DrainPolicy::All,
    });
    events
}

#[cfg(test)]
mod tests;
