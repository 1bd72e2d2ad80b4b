//! Element values carried inside collections, and their types.

use std::collections::BTreeSet;
use std::fmt;

/// A scalar or compound element. Ordering is total so values can key maps and sets.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Str(String),
    Tuple(Vec<Value>),
    Set(BTreeSet<Value>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElemType {
    Bool,
    Int,
    Str,
    Tuple(Vec<ElemType>),
    Set(Box<ElemType>),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Int(n)
    }

    pub fn str(s: &str) -> Value {
        Value::Str(s.to_string())
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::Tuple(vec![a, b])
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn has_type(&self, t: &ElemType) -> bool {
        match (self, t) {
            (Value::Bool(_), ElemType::Bool) => true,
            (Value::Int(_), ElemType::Int) => true,
            (Value::Str(_), ElemType::Str) => true,
            (Value::Tuple(vs), ElemType::Tuple(ts)) => {
                vs.len() == ts.len() && vs.iter().zip(ts).all(|(v, t)| v.has_type(t))
            }
            (Value::Set(vs), ElemType::Set(t)) => vs.iter().all(|v| v.has_type(t)),
            _ => false,
        }
    }

    /// The type of a value, or `None` when it contains an empty set.
    pub fn infer_type(&self) -> Option<ElemType> {
        match self {
            Value::Bool(_) => Some(ElemType::Bool),
            Value::Int(_) => Some(ElemType::Int),
            Value::Str(_) => Some(ElemType::Str),
            Value::Tuple(vs) => vs
                .iter()
                .map(Value::infer_type)
                .collect::<Option<Vec<_>>>()
                .map(ElemType::Tuple),
            Value::Set(vs) => {
                let t = vs.iter().next()?.infer_type()?;
                vs.iter()
                    .all(|v| v.has_type(&t))
                    .then(|| ElemType::Set(Box::new(t)))
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Tuple(vs) => {
                write!(f, "(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
            Value::Set(vs) => {
                write!(f, "{{")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

impl fmt::Display for ElemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElemType::Bool => write!(f, "bool"),
            ElemType::Int => write!(f, "int"),
            ElemType::Str => write!(f, "str"),
            ElemType::Tuple(ts) => {
                write!(f, "(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            ElemType::Set(t) => write!(f, "set<{t}>"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_is_structural() {
        let edge = Value::pair(Value::int(0), Value::int(1));
        assert!(edge.has_type(&ElemType::Tuple(vec![ElemType::Int, ElemType::Int])));
        assert!(!edge.has_type(&ElemType::Int));
        assert_eq!(Value::Set(BTreeSet::new()).infer_type(), None);
        assert!(Value::Set(BTreeSet::new()).has_type(&ElemType::Set(Box::new(ElemType::Str))));
    }

    #[test]
    fn inference_matches_membership() {
        let v = Value::Tuple(vec![Value::str("a"), Value::Bool(true)]);
        let t = v.infer_type().unwrap();
        assert!(v.has_type(&t));
        assert_eq!(t.to_string(), "(str,bool)");
    }
}
