//! The fixed catalog of pure element functions used by map, scan, fold and friends.
//!
//! Binary functions take a 2-tuple argument. `add`, `mul` and `max` also come in a
//! unary form with a bound constant operand.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::value::{ElemType, Value};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Id,
    Add(Option<i64>),
    Mul(Option<i64>),
    Max(Option<i64>),
    Inc,
    Const(Value),
    Proj(usize),
    Ge(i64),
    Uppercase,
    Singleton,
    Pipe(Vec<Func>),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FuncError {
    #[error("function {func} is not defined on argument {arg}")]
    Domain { func: String, arg: String },
    #[error("function {func} is not defined on type {ty}")]
    Type { func: String, ty: String },
    #[error("integer overflow in {func}")]
    Overflow { func: String },
}

fn int_pair(v: &Value) -> Option<(i64, i64)> {
    match v {
        Value::Tuple(vs) if vs.len() == 2 => Some((vs[0].as_int()?, vs[1].as_int()?)),
        _ => None,
    }
}

fn int_pair_type() -> ElemType {
    ElemType::Tuple(vec![ElemType::Int, ElemType::Int])
}

impl Func {
    pub fn name(&self) -> &'static str {
        match self {
            Func::Id => "id",
            Func::Add(_) => "add",
            Func::Mul(_) => "mul",
            Func::Max(_) => "max",
            Func::Inc => "inc",
            Func::Const(_) => "const",
            Func::Proj(_) => "proj",
            Func::Ge(_) => "ge",
            Func::Uppercase => "uppercase",
            Func::Singleton => "singleton",
            Func::Pipe(_) => "pipe",
        }
    }

    pub fn apply(&self, arg: &Value) -> Result<Value, FuncError> {
        let domain = || FuncError::Domain {
            func: self.to_string(),
            arg: arg.to_string(),
        };
        let overflow = || FuncError::Overflow {
            func: self.to_string(),
        };
        let arith = |op: fn(i64, i64) -> Option<i64>, c: &Option<i64>| -> Result<Value, FuncError> {
            let (a, b) = match c {
                Some(c) => (arg.as_int().ok_or_else(domain)?, *c),
                None => int_pair(arg).ok_or_else(domain)?,
            };
            op(a, b).map(Value::Int).ok_or_else(overflow)
        };
        match self {
            Func::Id => Ok(arg.clone()),
            Func::Add(c) => arith(i64::checked_add, c),
            Func::Mul(c) => arith(i64::checked_mul, c),
            Func::Max(c) => arith(|a, b| Some(a.max(b)), c),
            Func::Inc => arg
                .as_int()
                .ok_or_else(domain)?
                .checked_add(1)
                .map(Value::Int)
                .ok_or_else(overflow),
            Func::Const(v) => Ok(v.clone()),
            Func::Proj(i) => match arg {
                Value::Tuple(vs) => vs.get(*i).cloned().ok_or_else(domain),
                _ => Err(domain()),
            },
            Func::Ge(c) => Ok(Value::Bool(arg.as_int().ok_or_else(domain)? >= *c)),
            Func::Uppercase => match arg {
                Value::Str(s) => Ok(Value::Str(s.to_uppercase())),
                _ => Err(domain()),
            },
            Func::Singleton => Ok(Value::Set(BTreeSet::from([arg.clone()]))),
            Func::Pipe(fs) => fs.iter().try_fold(arg.clone(), |v, f| f.apply(&v)),
        }
    }

    /// Result type for an argument type; the static counterpart of `apply`.
    pub fn output_type(&self, arg: &ElemType) -> Result<ElemType, FuncError> {
        let bad = || FuncError::Type {
            func: self.to_string(),
            ty: arg.to_string(),
        };
        let arith = |c: &Option<i64>| {
            let ok = match c {
                Some(_) => *arg == ElemType::Int,
                None => *arg == int_pair_type(),
            };
            if ok {
                Ok(ElemType::Int)
            } else {
                Err(bad())
            }
        };
        match self {
            Func::Id => Ok(arg.clone()),
            Func::Add(c) | Func::Mul(c) | Func::Max(c) => arith(c),
            Func::Inc if *arg == ElemType::Int => Ok(ElemType::Int),
            Func::Ge(_) if *arg == ElemType::Int => Ok(ElemType::Bool),
            Func::Uppercase if *arg == ElemType::Str => Ok(ElemType::Str),
            Func::Inc | Func::Ge(_) | Func::Uppercase => Err(bad()),
            Func::Const(v) => v.infer_type().ok_or_else(bad),
            Func::Proj(i) => match arg {
                ElemType::Tuple(ts) => ts.get(*i).cloned().ok_or_else(bad),
                _ => Err(bad()),
            },
            Func::Singleton => Ok(ElemType::Set(Box::new(arg.clone()))),
            Func::Pipe(fs) => fs.iter().try_fold(arg.clone(), |t, f| f.output_type(&t)),
        }
    }
}

impl fmt::Display for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Func::Add(Some(c)) | Func::Mul(Some(c)) | Func::Max(Some(c)) | Func::Ge(c) => {
                write!(f, "{}({c})", self.name())
            }
            Func::Const(v) => write!(f, "const({v})"),
            Func::Proj(i) => write!(f, "proj({i})"),
            Func::Pipe(fs) => {
                write!(f, "pipe(")?;
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{g}")?;
                }
                write!(f, ")")
            }
            _ => write!(f, "{}", self.name()),
        }
    }
}
