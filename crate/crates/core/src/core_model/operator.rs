//! The operator contract and the closed set of built-in operators.

use thiserror::Error;

use super::{Collection, CollectionTypeTag, ConcatError, Delta, Rank, StreamType};
use crate::func::FuncError;
use crate::nested_streams::{Nest, ReadDefer, WriteDefer};
use crate::property_harness::fixtures::{RacyMerge, Stutter};
use crate::stdlib_lvar::{FoldLattice, Thresh, ToSequence, ToSequenceNaive};
use crate::stdlib_seq::{Fold, Id, Last, Map, Scan, Tee, Window};
use crate::stdlib_sets::{EdgeJoin, NestOnce, RepeatNested, SetUnion, Zip};
use crate::stdlib_zset::{ZSetJoin, ZSetMap};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("SubtypeMismatch at {op} input {position}: expected {expected}, found {found}")]
    SubtypeMismatch {
        op: String,
        position: usize,
        expected: String,
        found: String,
    },
    #[error("ArityMismatch in {context}: expected {expected}, found {found}")]
    ArityMismatch {
        context: String,
        expected: usize,
        found: usize,
    },
    #[error("BufferTypeMismatch at {op} buffer {position}")]
    BufferTypeMismatch { op: String, position: usize },
    #[error("DeferKeyUnbound: {0}")]
    DeferKeyUnbound(String),
    #[error("DeferKeyReusedOrUnused: {0}")]
    DeferKeyReusedOrUnused(String),
    #[error("BoundednessViolation at {op} input {position}")]
    BoundednessViolation { op: String, position: usize },
    #[error("NestOutputUnbounded: inner output {position} is unbounded")]
    NestOutputUnbounded { position: usize },
    #[error("DeferContextMismatch: key {0} is read and written at different types")]
    DeferContextMismatch(String),
    #[error("FunctionType at {op}: {source}")]
    Function { op: String, source: FuncError },
    #[error("InvalidParameter at {op}: {reason}")]
    InvalidParameter { op: String, reason: String },
    #[error("ThresholdsNotIncompatible: {0}")]
    ThresholdsNotIncompatible(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OpError {
    #[error("InvalidChoice: {0}")]
    InvalidChoice(String),
    #[error(transparent)]
    Concat(#[from] ConcatError),
    #[error("FunctionEvalError: {0}")]
    Func(#[from] FuncError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("ArityMismatch: expected {expected}, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("MissingKey: {0}")]
    MissingKey(String),
    #[error("DuplicateKey: {0}")]
    DuplicateKey(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

/// Result of one small step of an operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepOut {
    pub inputs: Vec<Collection>,
    pub op: Op,
    pub deltas: Vec<Delta>,
}

/// Contract for operators.
///
/// Obligations: every step strictly decreases `rank`; steps preserve membership of
/// inputs and outputs; the step relation is confluent. `choices` enumerates the
/// rule instances enabled on `inputs`, and zero means stuck.
pub trait Operator {
    fn name(&self) -> &'static str;
    fn arity(&self) -> (usize, usize);
    /// Output types for the given input types, or the typing error.
    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError>;
    fn choices(&self, inputs: &[Collection]) -> usize;
    fn step(&self, inputs: &[Collection], choice: usize) -> Result<StepOut, OpError>;
    /// Rank of the configuration; its length depends only on the operator parameters.
    fn rank(&self, inputs: &[Collection]) -> Rank;
    fn defer_read(&self) -> Option<(&str, &CollectionTypeTag)> {
        None
    }
    fn defer_write(&self) -> Option<&str> {
        None
    }
}

macro_rules! ops {
    ($($variant:ident($ty:ty)),* $(,)?) => {
        /// Built-in operators together with their state.
        #[derive(Clone, Debug, PartialEq, Eq, Hash)]
        pub enum Op {
            $($variant($ty),)*
        }

        impl Operator for Op {
            fn name(&self) -> &'static str {
                match self { $(Op::$variant(o) => o.name(),)* }
            }
            fn arity(&self) -> (usize, usize) {
                match self { $(Op::$variant(o) => o.arity(),)* }
            }
            fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
                check_arity(self.name(), self.arity().0, inputs.len())?;
                match self { $(Op::$variant(o) => o.signature(inputs),)* }
            }
            fn choices(&self, inputs: &[Collection]) -> usize {
                match self { $(Op::$variant(o) => o.choices(inputs),)* }
            }
            fn step(&self, inputs: &[Collection], choice: usize) -> Result<StepOut, OpError> {
                if choice >= self.choices(inputs) {
                    return Err(OpError::InvalidChoice(format!(
                        "{} has no enabled choice {choice}", self.name()
                    )));
                }
                match self { $(Op::$variant(o) => o.step(inputs, choice),)* }
            }
            fn rank(&self, inputs: &[Collection]) -> Rank {
                match self { $(Op::$variant(o) => o.rank(inputs),)* }
            }
            fn defer_read(&self) -> Option<(&str, &CollectionTypeTag)> {
                match self { $(Op::$variant(o) => o.defer_read(),)* }
            }
            fn defer_write(&self) -> Option<&str> {
                match self { $(Op::$variant(o) => o.defer_write(),)* }
            }
        }

        $(impl From<$ty> for Op {
            fn from(o: $ty) -> Op { Op::$variant(o) }
        })*
    };
}

ops! {
    Map(Map),
    Scan(Scan),
    Fold(Fold),
    Window(Window),
    Tee(Tee),
    Id(Id),
    Last(Last),
    FoldLattice(FoldLattice),
    Thresh(Thresh),
    ToSequence(ToSequence),
    ToSequenceNaive(ToSequenceNaive),
    ZSetMap(ZSetMap),
    ZSetJoin(ZSetJoin),
    EdgeJoin(EdgeJoin),
    SetUnion(SetUnion),
    RepeatNested(RepeatNested),
    Zip(Zip),
    NestOnce(NestOnce),
    Nest(Box<Nest>),
    ReadDefer(ReadDefer),
    WriteDefer(WriteDefer),
    RacyMerge(RacyMerge),
    Stutter(Stutter),
}

impl From<Nest> for Op {
    fn from(n: Nest) -> Op {
        Op::Nest(Box::new(n))
    }
}

impl<T: Operator + ?Sized> Operator for Box<T> {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn arity(&self) -> (usize, usize) {
        (**self).arity()
    }
    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        (**self).signature(inputs)
    }
    fn choices(&self, inputs: &[Collection]) -> usize {
        (**self).choices(inputs)
    }
    fn step(&self, inputs: &[Collection], choice: usize) -> Result<StepOut, OpError> {
        (**self).step(inputs, choice)
    }
    fn rank(&self, inputs: &[Collection]) -> Rank {
        (**self).rank(inputs)
    }
    fn defer_read(&self) -> Option<(&str, &CollectionTypeTag)> {
        (**self).defer_read()
    }
    fn defer_write(&self) -> Option<&str> {
        (**self).defer_write()
    }
}

fn check_arity(op: &str, expected: usize, found: usize) -> Result<(), TypeError> {
    if expected == found {
        Ok(())
    } else {
        Err(TypeError::ArityMismatch {
            context: op.to_string(),
            expected,
            found,
        })
    }
}

/// Helpers shared by operator implementations.
pub(crate) mod support {
    use super::*;

    pub fn mismatch(op: &str, position: usize, expected: &str, found: &StreamType) -> TypeError {
        TypeError::SubtypeMismatch {
            op: op.to_string(),
            position,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub fn require_bounded(op: &str, position: usize, t: &StreamType) -> Result<(), TypeError> {
        if t.is_bounded() {
            Ok(())
        } else {
            Err(TypeError::BoundednessViolation {
                op: op.to_string(),
                position,
            })
        }
    }

    pub fn func_err(op: &str, source: FuncError) -> TypeError {
        TypeError::Function {
            op: op.to_string(),
            source,
        }
    }

    pub fn malformed(op: &str, what: &str) -> OpError {
        OpError::Malformed(format!("{op}: {what}"))
    }

    /// Pending flag used by terminator-forwarding rules.
    pub fn flag(b: bool) -> u64 {
        u64::from(b)
    }
}
