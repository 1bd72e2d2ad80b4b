//! Collection-language and operator contracts shared by every other module.
//!
//! A collection value is its own canonical expression, so there is no separate
//! syntax layer and lowering is the identity.

pub(crate) mod operator;
mod syntax;

pub use operator::{Op, OpError, Operator, StepOut, TypeError};
pub use syntax::ParseTypeError;

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::nested_streams::{NestedDelta, NestedSeqValue};
use crate::stdlib_lvar::{LVarValue, Lattice};
use crate::stdlib_seq::{SeqValue, SingletonNat};
use crate::stdlib_sets::SetValue;
use crate::value::ElemType;
use crate::IntZSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Boundedness {
    Bounded,
    Unbounded,
}

impl Boundedness {
    /// Bounded only when every argument is bounded.
    pub fn join(self, other: Boundedness) -> Boundedness {
        if self == Boundedness::Bounded && other == Boundedness::Bounded {
            Boundedness::Bounded
        } else {
            Boundedness::Unbounded
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CollectionTypeTag {
    Seq(ElemType),
    Set(ElemType),
    ZSet(ElemType),
    LVar(Lattice),
    Nat,
    Nested(Vec<StreamType>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StreamType {
    pub collection: CollectionTypeTag,
    pub bound: Boundedness,
}

impl StreamType {
    pub fn new(collection: CollectionTypeTag, bound: Boundedness) -> StreamType {
        StreamType { collection, bound }
    }

    pub fn bounded(collection: CollectionTypeTag) -> StreamType {
        StreamType::new(collection, Boundedness::Bounded)
    }

    pub fn unbounded(collection: CollectionTypeTag) -> StreamType {
        StreamType::new(collection, Boundedness::Unbounded)
    }

    pub fn with_bound(&self, bound: Boundedness) -> StreamType {
        StreamType::new(self.collection.clone(), bound)
    }

    pub fn is_bounded(&self) -> bool {
        self.bound == Boundedness::Bounded
    }
}

/// Reflexive, plus `(C, B) <= (C, U)`. Nothing else.
pub fn subtype(a: &StreamType, b: &StreamType) -> bool {
    a.collection == b.collection && (a.bound == b.bound || b.bound == Boundedness::Unbounded)
}

/// Element-wise subtyping; tuples of different arity are unrelated.
pub fn subtype_all(a: &[StreamType], b: &[StreamType]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| subtype(x, y))
}

/// Lexicographic natural-number tuple. Shorter tuples compare as if zero-padded.
///
/// Every operator returns ranks of a length fixed by its parameters, which is what
/// makes the order well-founded.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Rank(pub Vec<u64>);

impl Rank {
    pub fn concat(parts: impl IntoIterator<Item = Rank>) -> Rank {
        Rank(parts.into_iter().flat_map(|r| r.0).collect())
    }
}

impl Ord for Rank {
    fn cmp(&self, other: &Rank) -> Ordering {
        let n = self.0.len().max(other.0.len());
        let at = |r: &Rank, i: usize| r.0.get(i).copied().unwrap_or(0);
        (0..n)
            .map(|i| at(self, i).cmp(&at(other, i)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

impl PartialOrd for Rank {
    fn partial_cmp(&self, other: &Rank) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ConcatError {
    #[error("delta shape does not match collection language {0}")]
    PayloadShapeMismatch(&'static str),
    #[error("nested push would leave an unfixed bounded component behind")]
    BoundednessInvariantViolation,
    #[error("singleton already holds a value")]
    SingletonOverwrite,
    #[error("nested delta arity {found} does not match inner arity {expected}")]
    NestedArity { expected: usize, found: usize },
    #[error("extend on a nested value with no tuples")]
    ExtendOnEmpty,
}

/// Contract every registered collection language implements.
///
/// Laws: `fix(c).is_fixed()`; `c.is_fixed()` implies `concat(c, d) == c`;
/// `concat(c, empty_delta()) == c`; concatenation preserves membership.
pub trait CollectionLanguage: Clone + PartialEq {
    type Delta: Clone;

    fn concat(&self, d: &Self::Delta) -> Result<Self, ConcatError>;
    /// Concatenation with the terminator.
    fn terminate(&self) -> Self;
    fn is_fixed(&self) -> bool;
    fn fix(&self) -> Self {
        self.terminate()
    }
    fn empty_delta(&self) -> Self::Delta;
    fn member(&self, tag: &CollectionTypeTag) -> bool;
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Collection {
    Seq(SeqValue),
    Set(SetValue),
    ZSet(IntZSet),
    LVar(LVarValue),
    Nat(SingletonNat),
    Nested(NestedSeqValue),
}

/// Right operand of concatenation. Flat languages use a value of the same
/// language as payload, whose fixed flag means "then terminate".
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Delta {
    Empty,
    End,
    Seq(SeqValue),
    Set(SetValue),
    ZSet(IntZSet),
    LVar(LVarValue),
    Nat(SingletonNat),
    Nested(NestedDelta),
}

impl Delta {
    pub fn is_empty(&self) -> bool {
        match self {
            Delta::Empty => true,
            Delta::End => false,
            Delta::Nested(d) => d.ops.is_empty() && !d.end,
            other => Collection::from_flat_delta(other)
                .map(|c| c.content_size() == 0 && !c.is_fixed())
                .unwrap_or(false),
        }
    }

    pub fn empties(n: usize) -> Vec<Delta> {
        vec![Delta::Empty; n]
    }
}

impl Collection {
    pub fn language(&self) -> &'static str {
        match self {
            Collection::Seq(_) => "seq",
            Collection::Set(_) => "set",
            Collection::ZSet(_) => "zset",
            Collection::LVar(_) => "lvar",
            Collection::Nat(_) => "nat",
            Collection::Nested(_) => "nested",
        }
    }

    pub fn concat(&self, d: &Delta) -> Result<Collection, ConcatError> {
        let lang = self.language();
        let mismatch = || ConcatError::PayloadShapeMismatch(lang);
        Ok(match (self, d) {
            (c, Delta::Empty) => c.clone(),
            (c, Delta::End) => c.terminate(),
            (Collection::Seq(c), Delta::Seq(x)) => Collection::Seq(c.concat(x)?),
            (Collection::Set(c), Delta::Set(x)) => Collection::Set(c.concat(x)?),
            (Collection::ZSet(c), Delta::ZSet(x)) => Collection::ZSet(c.concat(x)?),
            (Collection::LVar(c), Delta::LVar(x)) => Collection::LVar(c.concat(x)?),
            (Collection::Nat(c), Delta::Nat(x)) => Collection::Nat(c.concat(x)?),
            (Collection::Nested(c), Delta::Nested(x)) => Collection::Nested(c.concat(x)?),
            _ => return Err(mismatch()),
        })
    }

    pub fn concat_all(cs: &[Collection], ds: &[Delta]) -> Result<Vec<Collection>, ConcatError> {
        if cs.len() != ds.len() {
            return Err(ConcatError::NestedArity {
                expected: cs.len(),
                found: ds.len(),
            });
        }
        cs.iter().zip(ds).map(|(c, d)| c.concat(d)).collect()
    }

    pub fn terminate(&self) -> Collection {
        match self {
            Collection::Seq(c) => Collection::Seq(c.terminate()),
            Collection::Set(c) => Collection::Set(c.terminate()),
            Collection::ZSet(c) => Collection::ZSet(c.terminate()),
            Collection::LVar(c) => Collection::LVar(c.terminate()),
            Collection::Nat(c) => Collection::Nat(c.terminate()),
            Collection::Nested(c) => Collection::Nested(c.terminate()),
        }
    }

    pub fn is_fixed(&self) -> bool {
        match self {
            Collection::Seq(c) => c.is_fixed(),
            Collection::Set(c) => c.is_fixed(),
            Collection::ZSet(c) => c.is_fixed(),
            Collection::LVar(c) => c.is_fixed(),
            Collection::Nat(c) => c.is_fixed(),
            Collection::Nested(c) => c.is_fixed(),
        }
    }

    pub fn fix(&self) -> Collection {
        match self {
            Collection::Nested(c) => Collection::Nested(c.fix()),
            other => other.terminate(),
        }
    }

    pub fn member(&self, tag: &CollectionTypeTag) -> bool {
        match self {
            Collection::Seq(c) => c.member(tag),
            Collection::Set(c) => c.member(tag),
            Collection::ZSet(c) => c.member(tag),
            Collection::LVar(c) => c.member(tag),
            Collection::Nat(c) => c.member(tag),
            Collection::Nested(c) => c.member(tag),
        }
    }

    /// The neutral starting value of a type.
    pub fn bottom(tag: &CollectionTypeTag) -> Collection {
        match tag {
            CollectionTypeTag::Seq(_) => Collection::Seq(SeqValue::default()),
            CollectionTypeTag::Set(_) => Collection::Set(SetValue::default()),
            CollectionTypeTag::ZSet(_) => Collection::ZSet(IntZSet::default()),
            CollectionTypeTag::LVar(l) => Collection::LVar(LVarValue::bottom(l.clone())),
            CollectionTypeTag::Nat => Collection::Nat(SingletonNat::default()),
            CollectionTypeTag::Nested(inner) => {
                Collection::Nested(NestedSeqValue::empty(inner.clone()))
            }
        }
    }

    pub fn bottoms(types: &[StreamType]) -> Vec<Collection> {
        types.iter().map(|t| Collection::bottom(&t.collection)).collect()
    }

    /// Bottom of the same language and parameters as `self`.
    pub fn bottom_like(&self) -> Collection {
        match self {
            Collection::Seq(_) => Collection::Seq(SeqValue::default()),
            Collection::Set(_) => Collection::Set(SetValue::default()),
            Collection::ZSet(_) => Collection::ZSet(IntZSet::default()),
            Collection::LVar(c) => Collection::LVar(LVarValue::bottom(c.lattice.clone())),
            Collection::Nat(_) => Collection::Nat(SingletonNat::default()),
            Collection::Nested(c) => Collection::Nested(NestedSeqValue::empty(c.inner.clone())),
        }
    }

    /// Number of pending content units: items, elements, keys, tuples, or one for
    /// a non-bottom lattice or a present singleton.
    pub fn content_size(&self) -> usize {
        match self {
            Collection::Seq(c) => c.items.len(),
            Collection::Set(c) => c.elems.len(),
            Collection::ZSet(c) => c.cards.len(),
            Collection::LVar(c) => usize::from(!c.is_bottom()),
            Collection::Nat(c) => usize::from(c.value.is_some()),
            Collection::Nested(c) => c.tuples.len(),
        }
    }

    /// The whole value as a delta, including its terminator when fixed.
    pub fn as_delta(&self) -> Delta {
        match self {
            Collection::Seq(c) => Delta::Seq(c.clone()),
            Collection::Set(c) => Delta::Set(c.clone()),
            Collection::ZSet(c) => Delta::ZSet(c.clone()),
            Collection::LVar(c) => Delta::LVar(c.clone()),
            Collection::Nat(c) => Delta::Nat(c.clone()),
            Collection::Nested(c) => Delta::Nested(c.as_delta()),
        }
    }

    /// Splits a flat value into its content as an unterminated delta and an emptied
    /// remainder that keeps the fixed flag. `None` for nested values.
    pub fn take_content(&self) -> Option<(Delta, Collection)> {
        if let Collection::Nested(_) = self {
            return None;
        }
        let fixed = self.is_fixed();
        let mut rest = self.bottom_like();
        if fixed {
            rest = rest.terminate();
        }
        let content = match self {
            Collection::Seq(c) => Delta::Seq(SeqValue::new(c.items.clone(), false)),
            Collection::Set(c) => Delta::Set(SetValue::new(c.elems.clone(), false)),
            Collection::ZSet(c) => Delta::ZSet(IntZSet::from_cards(c.cards.clone(), false)),
            Collection::LVar(c) => {
                Delta::LVar(LVarValue::new(c.lattice.clone(), c.value.clone(), false))
            }
            Collection::Nat(c) => Delta::Nat(SingletonNat::new(c.value, false)),
            Collection::Nested(_) => unreachable!(),
        };
        Some((content, rest))
    }

    fn from_flat_delta(d: &Delta) -> Option<Collection> {
        Some(match d {
            Delta::Seq(c) => Collection::Seq(c.clone()),
            Delta::Set(c) => Collection::Set(c.clone()),
            Delta::ZSet(c) => Collection::ZSet(c.clone()),
            Delta::LVar(c) => Collection::LVar(c.clone()),
            Delta::Nat(c) => Collection::Nat(c.clone()),
            _ => return None,
        })
    }

    pub fn all_members(cs: &[Collection], types: &[StreamType]) -> bool {
        cs.len() == types.len() && cs.iter().zip(types).all(|(c, t)| c.member(&t.collection))
    }

    pub fn as_seq(&self) -> Option<&SeqValue> {
        match self {
            Collection::Seq(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&SetValue> {
        match self {
            Collection::Set(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_zset(&self) -> Option<&IntZSet> {
        match self {
            Collection::ZSet(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_lvar(&self) -> Option<&LVarValue> {
        match self {
            Collection::LVar(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_nat(&self) -> Option<&SingletonNat> {
        match self {
            Collection::Nat(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_nested(&self) -> Option<&NestedSeqValue> {
        match self {
            Collection::Nested(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Boundedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundedness::Bounded => "B",
            Boundedness::Unbounded => "U",
        })
    }
}

impl fmt::Display for CollectionTypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CollectionTypeTag::Seq(t) => write!(f, "seq<{t}>"),
            CollectionTypeTag::Set(t) => write!(f, "set<{t}>"),
            CollectionTypeTag::ZSet(t) => write!(f, "zset<{t}>"),
            CollectionTypeTag::LVar(l) => write!(f, "lvar<{l}>"),
            CollectionTypeTag::Nat => write!(f, "nat"),
            CollectionTypeTag::Nested(inner) => {
                write!(f, "[")?;
                for (i, s) in inner.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl fmt::Display for StreamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.collection, self.bound)
    }
}

#[cfg(test)]
mod tests;
