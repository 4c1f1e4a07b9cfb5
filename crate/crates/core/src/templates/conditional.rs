//! Conditional router and its predicate language.
//!
//! ```text
//! expr    := and ("or" and)*
//! and     := unary ("and" unary)*
//! unary   := "not" unary | "(" expr ")" | operand cmp operand
//! operand := "amount" | "now" | "meta." key | integer | "string"
//! cmp     := "<" | "<=" | "==" | "=" | ">=" | ">" | "!="
//! ```

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::event::Scalar;
use crate::gas::GasKind;
use crate::nodes::{ErrorSeverity, StreamError, StreamErrorCode, StreamMessage};

use super::{Ctx, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
    Ne,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Ne => "!=",
        }
    }

    fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Eq => ord == Equal,
            CmpOp::Ge => ord != Less,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ne => ord != Equal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Amount,
    Now,
    Meta(String),
    Lit(Scalar),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Predicate {
    Cmp(Operand, CmpOp, Operand),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Not(Box<Predicate>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("metadata key `{0}` is missing")]
    MissingMetadataKey(String),
}

impl Predicate {
    /// Evaluates with short-circuiting, calling `tick` once per node visited.
    pub fn eval(
        &self,
        msg: &StreamMessage,
        now: u64,
        tick: &mut dyn FnMut(),
    ) -> Result<bool, EvalError> {
        tick();
        match self {
            Predicate::Cmp(l, op, r) => {
                let l = resolve(l, msg, now)?;
                let r = resolve(r, msg, now)?;
                // mixed int/string comparisons are simply false
                Ok(match (&l, &r) {
                    (Scalar::Int(a), Scalar::Int(b)) => op.holds(a.cmp(b)),
                    (Scalar::Str(a), Scalar::Str(b)) => op.holds(a.cmp(b)),
                    _ => false,
                })
            }
            Predicate::And(items) => {
                for p in items {
                    if !p.eval(msg, now, tick)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Predicate::Or(items) => {
                for p in items {
                    if p.eval(msg, now, tick)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Predicate::Not(p) => Ok(!p.eval(msg, now, tick)?),
        }
    }
}

fn resolve(op: &Operand, msg: &StreamMessage, now: u64) -> Result<Scalar, EvalError> {
    Ok(match op {
        Operand::Amount => Scalar::Int(msg.amount.units()),
        Operand::Now => Scalar::Int(now as u128),
        Operand::Lit(v) => v.clone(),
        Operand::Meta(key) => msg
            .metadata
            .get(key)
            .cloned()
            .ok_or_else(|| EvalError::MissingMetadataKey(key.clone()))?,
    })
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Amount => f.write_str("amount"),
            Operand::Now => f.write_str("now"),
            Operand::Meta(k) => write!(f, "meta.{k}"),
            Operand::Lit(Scalar::Int(v)) => write!(f, "{v}"),
            Operand::Lit(Scalar::Str(s)) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

impl fmt::Display for Predicate {
    /// Canonical text; parses back to an equal predicate.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>,
                    items: &[Predicate],
                    sep: &str,
                    wrap: fn(&Predicate) -> bool| {
            for (i, p) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                if wrap(p) {
                    write!(f, "({p})")?;
                } else {
                    write!(f, "{p}")?;
                }
            }
            Ok(())
        };
        match self {
            Predicate::Cmp(l, op, r) => write!(f, "{l} {} {r}", op.symbol()),
            Predicate::Or(items) => join(f, items, " or ", |p| matches!(p, Predicate::Or(_))),
            Predicate::And(items) => join(f, items, " and ", |p| {
                matches!(p, Predicate::Or(_) | Predicate::And(_))
            }),
            Predicate::Not(p) => match **p {
                Predicate::And(_) | Predicate::Or(_) => write!(f, "not ({p})"),
                _ => write!(f, "not {p}"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("predicate error at offset {offset}: {message}")]
pub struct PredicateParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(u128),
    Str(String),
    Op(CmpOp),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, PredicateParseError> {
    let err = |offset: usize, message: &str| PredicateParseError {
        offset,
        message: message.to_string(),
    };
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let next = chars.get(i + 1).map(|&(_, c)| c);
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                toks.push((pos, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((pos, Tok::RParen));
                i += 1;
            }
            '<' | '>' | '=' | '!' | '≤' | '≥' | '≠' => {
                let (op, len) = match (c, next) {
                    ('<', Some('=')) => (CmpOp::Le, 2),
                    ('<', _) => (CmpOp::Lt, 1),
                    ('>', Some('=')) => (CmpOp::Ge, 2),
                    ('>', _) => (CmpOp::Gt, 1),
                    ('=', Some('=')) => (CmpOp::Eq, 2),
                    ('=', _) => (CmpOp::Eq, 1),
                    ('!', Some('=')) => (CmpOp::Ne, 2),
                    ('≤', _) => (CmpOp::Le, 1),
                    ('≥', _) => (CmpOp::Ge, 1),
                    ('≠', _) => (CmpOp::Ne, 1),
                    _ => return Err(err(pos, "expected `!=`")),
                };
                toks.push((pos, Tok::Op(op)));
                i += len;
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(pos, "unterminated string")),
                        Some(&(_, '"')) => {
                            i += 1;
                            break;
                        }
                        Some(&(p, '\\')) => match chars.get(i + 1) {
                            Some(&(_, e @ ('"' | '\\'))) => {
                                s.push(e);
                                i += 2;
                            }
                            _ => return Err(err(p, "invalid escape")),
                        },
                        Some(&(_, c)) => {
                            s.push(c);
                            i += 1;
                        }
                    }
                }
                toks.push((pos, Tok::Str(s)));
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].1.is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                let v = text
                    .parse::<u128>()
                    .map_err(|_| err(pos, "integer out of range"))?;
                toks.push((pos, Tok::Int(v)));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].1.is_ascii_alphanumeric() || matches!(chars[i].1, '_' | '.' | '-'))
                {
                    i += 1;
                }
                let text: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                toks.push((pos, Tok::Ident(text)));
            }
            _ => return Err(err(pos, &format!("unexpected character `{c}`"))),
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn err<T>(&self, message: &str) -> Result<T, PredicateParseError> {
        Err(PredicateParseError {
            offset: self.offset(),
            message: message.to_string(),
        })
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Predicate, PredicateParseError> {
        let mut items = vec![self.and()?];
        while self.keyword("or") {
            items.push(self.and()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Predicate::Or(items)
        })
    }

    fn and(&mut self) -> Result<Predicate, PredicateParseError> {
        let mut items = vec![self.unary()?];
        while self.keyword("and") {
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Predicate::And(items)
        })
    }

    fn unary(&mut self) -> Result<Predicate, PredicateParseError> {
        if self.keyword("not") {
            return Ok(Predicate::Not(Box::new(self.unary()?)));
        }
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let inner = self.expr()?;
            if self.peek() != Some(&Tok::RParen) {
                return self.err("expected `)`");
            }
            self.pos += 1;
            return Ok(inner);
        }
        let lhs = self.operand()?;
        let op = match self.peek() {
            Some(Tok::Op(op)) => *op,
            _ => return self.err("expected comparison operator"),
        };
        self.pos += 1;
        let rhs = self.operand()?;
        Ok(Predicate::Cmp(lhs, op, rhs))
    }

    fn operand(&mut self) -> Result<Operand, PredicateParseError> {
        let op = match self.peek() {
            Some(Tok::Int(v)) => Operand::Lit(Scalar::Int(*v)),
            Some(Tok::Str(s)) => Operand::Lit(Scalar::Str(s.clone())),
            Some(Tok::Ident(id)) if id == "amount" => Operand::Amount,
            Some(Tok::Ident(id)) if id == "now" => Operand::Now,
            Some(Tok::Ident(id)) => match id.strip_prefix("meta.") {
                Some(key) if !key.is_empty() => Operand::Meta(key.to_string()),
                _ => return self.err(&format!("unknown operand `{id}`")),
            },
            _ => return self.err("expected operand"),
        };
        self.pos += 1;
        Ok(op)
    }
}

impl FromStr for Predicate {
    type Err = PredicateParseError;

    fn from_str(src: &str) -> Result<Self, Self::Err> {
        let mut p = Parser {
            toks: lex(src)?,
            pos: 0,
            end: src.len(),
        };
        let expr = p.expr()?;
        if p.pos != p.toks.len() {
            return p.err("unexpected trailing input");
        }
        Ok(expr)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionConfig {
    pub predicate: Predicate,
    /// Severity raised when the predicate is false.
    pub on_false: ErrorSeverity,
}

impl ConditionConfig {
    pub(super) fn receive(&self, ctx: &mut Ctx<'_>, msg: &StreamMessage) -> Vec<Step> {
        let mut ticks = 0u64;
        let result = self.predicate.eval(msg, ctx.now, &mut || ticks += 1);
        ctx.gas.charge_n(GasKind::PredicateEval, ticks);
        let forward = Step::Forward {
            output: 0,
            msg: msg.clone(),
        };
        let error = match result {
            Ok(true) => return vec![forward],
            Ok(false) => StreamError::new(
                self.on_false,
                StreamErrorCode::PredicateFalse,
                format!("condition `{}` is false", self.predicate),
            ),
            Err(EvalError::MissingMetadataKey(key)) => StreamError::new(
                ErrorSeverity::Recoverable,
                StreamErrorCode::MissingMetadataKey,
                format!("metadata key `{key}` is missing"),
            ),
        };
        vec![Step::fail(error, msg.clone(), vec![forward])]
    }
}
