//! Executable kernel for streaming dataflow graphs typed by boundedness.
//!
//! Collections (sequences, sets, z-sets, lattice variables, singletons and nested
//! streams) flow through operators composed in sequence and in parallel. The
//! small-step semantics, the typechecker and a property harness that checks
//! eager execution, streaming progress and determinism live here; the `flo`
//! binary is a thin command-line layer over this crate.

pub mod core_model;
pub mod func;
pub mod graph_lang;
pub mod json;
pub mod nested_streams;
pub mod programs;
pub mod property_harness;
pub mod scheduler;
pub mod stdlib_lvar;
pub mod stdlib_seq;
pub mod stdlib_sets;
pub mod stdlib_zset;
pub mod value;

/// Z-sets over element values with machine-integer weights.
pub type IntZSet = stdlib_zset::ZSetValue<value::Value, i64>;

pub use core_model::{
    Boundedness, Collection, CollectionTypeTag, Delta, Op, OpError, Operator, Rank, StreamType,
    TypeError,
};
pub use graph_lang::{GraphExpr, StepChoice};
pub use scheduler::{Config, Program, Schedule};
pub use value::{ElemType, Value};

#[cfg(test)]
pub(crate) mod testutil {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::scheduler::{run_once, Program, Schedule};
    use crate::{Collection, GraphExpr, Op, StreamType};

    pub fn ty(s: &str) -> StreamType {
        s.parse().expect("well-formed type")
    }

    pub fn tys(ss: &[&str]) -> Vec<StreamType> {
        ss.iter().map(|s| ty(s)).collect()
    }

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Outputs of `op` alone, run to quiescence on whole inputs.
    pub fn run_op(op: impl Into<Op>, types: &[&str], inputs: &[Collection]) -> Vec<Collection> {
        let p = Program::new(&GraphExpr::node(op), tys(types)).expect("typechecks");
        run_once(&p, inputs, &mut Schedule::round_robin()).expect("runs").outputs
    }
}
