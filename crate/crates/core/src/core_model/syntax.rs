//! Textual type syntax, the inverse of the `Display` impls.
//!
//! ```text
//! elem   := int | str | bool | (elem, ...) | set<elem>
//! lat    := max_nat | set<elem> | product<lat, lat>
//! coll   := seq<elem> | set<elem> | zset<elem> | lvar<lat> | nat | [stream, ...]
//! stream := coll : (B | U)
//! ```

use std::str::FromStr;

use thiserror::Error;

use super::{Boundedness, CollectionTypeTag, StreamType};
use crate::stdlib_lvar::Lattice;
use crate::value::ElemType;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("cannot parse type {input:?}: {reason} at offset {offset}")]
pub struct ParseTypeError {
    pub input: String,
    pub offset: usize,
    pub reason: String,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn err<T>(&self, reason: &str) -> Result<T, ParseTypeError> {
        Err(ParseTypeError {
            input: self.src.to_string(),
            offset: self.pos,
            reason: reason.to_string(),
        })
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), ParseTypeError> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.err(&format!("expected {tok:?}"))
        }
    }

    fn word(&mut self) -> &'a str {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let n = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        self.pos += n;
        &rest[..n]
    }

    fn finish(&mut self) -> Result<(), ParseTypeError> {
        self.skip_ws();
        if self.pos == self.src.len() {
            Ok(())
        } else {
            self.err("trailing input")
        }
    }

    fn elem(&mut self) -> Result<ElemType, ParseTypeError> {
        if self.eat("(") {
            let mut ts = vec![self.elem()?];
            while self.eat(",") {
                ts.push(self.elem()?);
            }
            self.expect(")")?;
            return Ok(ElemType::Tuple(ts));
        }
        match self.word() {
            "int" => Ok(ElemType::Int),
            "str" => Ok(ElemType::Str),
            "bool" => Ok(ElemType::Bool),
            "set" => {
                self.expect("<")?;
                let t = self.elem()?;
                self.expect(">")?;
                Ok(ElemType::Set(Box::new(t)))
            }
            _ => self.err("unknown element type"),
        }
    }

    fn lattice(&mut self) -> Result<Lattice, ParseTypeError> {
        match self.word() {
            "max_nat" => Ok(Lattice::MaxNat),
            "set" => {
                self.expect("<")?;
                let t = self.elem()?;
                self.expect(">")?;
                Ok(Lattice::SetUnion(t))
            }
            "product" => {
                self.expect("<")?;
                let a = self.lattice()?;
                self.expect(",")?;
                let b = self.lattice()?;
                self.expect(">")?;
                Ok(Lattice::Product(Box::new(a), Box::new(b)))
            }
            _ => self.err("unknown lattice"),
        }
    }

    fn collection(&mut self) -> Result<CollectionTypeTag, ParseTypeError> {
        if self.eat("[") {
            let mut inner = vec![self.stream()?];
            while self.eat(",") {
                inner.push(self.stream()?);
            }
            self.expect("]")?;
            return Ok(CollectionTypeTag::Nested(inner));
        }
        let kw = self.word();
        if kw == "nat" {
            return Ok(CollectionTypeTag::Nat);
        }
        self.expect("<")?;
        let tag = match kw {
            "seq" => CollectionTypeTag::Seq(self.elem()?),
            "set" => CollectionTypeTag::Set(self.elem()?),
            "zset" => CollectionTypeTag::ZSet(self.elem()?),
            "lvar" => CollectionTypeTag::LVar(self.lattice()?),
            _ => return self.err("unknown collection language"),
        };
        self.expect(">")?;
        Ok(tag)
    }

    fn stream(&mut self) -> Result<StreamType, ParseTypeError> {
        let c = self.collection()?;
        self.expect(":")?;
        let bound = match self.word() {
            "B" => Boundedness::Bounded,
            "U" => Boundedness::Unbounded,
            _ => return self.err("expected B or U"),
        };
        Ok(StreamType::new(c, bound))
    }
}

macro_rules! from_str_via {
    ($ty:ty, $method:ident) => {
        impl FromStr for $ty {
            type Err = ParseTypeError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let mut p = Parser::new(s);
                let v = p.$method()?;
                p.finish()?;
                Ok(v)
            }
        }
    };
}

from_str_via!(ElemType, elem);
from_str_via!(Lattice, lattice);
from_str_via!(CollectionTypeTag, collection);
from_str_via!(StreamType, stream);
