//! Model-selection predicates such as `k == 20 | k == 80` or `k > 30 & k <= 60`.

use std::fmt;

use crate::component::Model;
use crate::error::{Error, Result};
use crate::param::ParamValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Number(f64),
    Str(String),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Cmp {
        param: String,
        op: CmpOp,
        value: Literal,
    },
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    Not(Box<Predicate>),
}

impl Predicate {
    pub fn cmp(param: &str, op: CmpOp, value: f64) -> Self {
        Predicate::Cmp {
            param: param.to_string(),
            op,
            value: Literal::Number(value),
        }
    }

    pub fn eq(param: &str, value: f64) -> Self {
        Self::cmp(param, CmpOp::Eq, value)
    }

    pub fn and(self, other: Predicate) -> Self {
        Predicate::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Predicate) -> Self {
        Predicate::Or(Box::new(self), Box::new(other))
    }

    pub fn parse(src: &str) -> Result<Predicate> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let expr = p.or()?;
        if let Some((off, t)) = p.tokens.get(p.pos) {
            return Err(Error::Predicate {
                offset: *off,
                message: format!("unexpected {t:?}"),
            });
        }
        Ok(expr)
    }

    /// Evaluates against a model's scalar generation args and params.
    pub fn matches(&self, model: &Model) -> Result<bool> {
        self.eval(&|name| model.scalar(name))
    }

    pub fn eval<'a>(&self, lookup: &dyn Fn(&str) -> Option<&'a ParamValue>) -> Result<bool> {
        match self {
            Predicate::And(a, b) => Ok(a.eval(lookup)? && b.eval(lookup)?),
            Predicate::Or(a, b) => Ok(a.eval(lookup)? || b.eval(lookup)?),
            Predicate::Not(a) => Ok(!a.eval(lookup)?),
            Predicate::Cmp { param, op, value } => {
                let actual = lookup(param).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "predicate refers to unknown scalar parameter {param:?}"
                    ))
                })?;
                let ord = match (actual, value) {
                    (ParamValue::Str(a), Literal::Str(b)) => a.as_str().partial_cmp(b.as_str()),
                    (ParamValue::Boolean(a), Literal::Bool(b)) => a.partial_cmp(b),
                    (a, Literal::Number(b)) => a.as_f64().and_then(|a| a.partial_cmp(b)),
                    (a, Literal::Bool(b)) => a
                        .as_f64()
                        .and_then(|a| a.partial_cmp(&f64::from(u8::from(*b)))),
                    _ => None,
                };
                let Some(ord) = ord else {
                    return Err(Error::Type(format!(
                        "cannot compare parameter {param:?} ({}) with {value:?}",
                        actual.type_name()
                    )));
                };
                use std::cmp::Ordering::*;
                Ok(match op {
                    CmpOp::Eq => ord == Equal,
                    CmpOp::Ne => ord != Equal,
                    CmpOp::Lt => ord == Less,
                    CmpOp::Le => ord != Greater,
                    CmpOp::Gt => ord == Greater,
                    CmpOp::Ge => ord != Less,
                })
            }
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Cmp { param, op, value } => {
                write!(f, "{param} {} ", op.symbol())?;
                match value {
                    Literal::Number(x) => write!(f, "{x}"),
                    Literal::Str(s) => write!(f, "{s:?}"),
                    Literal::Bool(b) => write!(f, "{b}"),
                }
            }
            Predicate::And(a, b) => write!(f, "({a} & {b})"),
            Predicate::Or(a, b) => write!(f, "({a} | {b})"),
            Predicate::Not(a) => write!(f, "!({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Num(f64),
    Str(String),
    Op(CmpOp),
    And,
    Or,
    Not,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |offset: usize, message: &str| Error::Predicate {
        offset,
        message: message.to_string(),
    };
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        let two = src.get(i..i + 2).unwrap_or("");
        let tok = match c {
            ' ' | '\t' | '\n' => {
                i += 1;
                continue;
            }
            '(' => {
                i += 1;
                Token::LParen
            }
            ')' => {
                i += 1;
                Token::RParen
            }
            '&' => {
                i += if two == "&&" { 2 } else { 1 };
                Token::And
            }
            '|' => {
                i += if two == "||" { 2 } else { 1 };
                Token::Or
            }
            '=' if two == "==" => {
                i += 2;
                Token::Op(CmpOp::Eq)
            }
            '!' if two == "!=" => {
                i += 2;
                Token::Op(CmpOp::Ne)
            }
            '!' => {
                i += 1;
                Token::Not
            }
            '<' | '>' => {
                let eq = two.ends_with('=');
                i += if eq { 2 } else { 1 };
                Token::Op(match (c, eq) {
                    ('<', true) => CmpOp::Le,
                    ('<', false) => CmpOp::Lt,
                    ('>', true) => CmpOp::Ge,
                    _ => CmpOp::Gt,
                })
            }
            '"' | '\'' => {
                let close = src[i + 1..]
                    .find(c)
                    .ok_or_else(|| err(i, "unterminated string"))?;
                let s = src[i + 1..i + 1 + close].to_string();
                i += close + 2;
                Token::Str(s)
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' => {
                let end = src[i..]
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || matches!(ch, '.' | '-' | '+')))
                    .map_or(src.len(), |e| i + e);
                let text = &src[i..end];
                let v = text
                    .parse::<f64>()
                    .map_err(|_| err(i, &format!("bad number {text:?}")))?;
                i = end;
                Token::Num(v)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let end = src[i..]
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_' || ch == '.'))
                    .map_or(src.len(), |e| i + e);
                let text = src[i..end].to_string();
                i = end;
                Token::Ident(text)
            }
            _ => return Err(err(i, &format!("unexpected character {c:?}"))),
        };
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(usize::MAX, |(o, _)| *o)
    }

    fn error(&self, message: &str) -> Error {
        Error::Predicate {
            offset: self.offset(),
            message: message.to_string(),
        }
    }

    fn or(&mut self) -> Result<Predicate> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            lhs = lhs.or(self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Predicate> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            lhs = lhs.and(self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Predicate> {
        match self.peek() {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(Predicate::Not(Box::new(self.unary()?)))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let e = self.or()?;
                if self.peek() != Some(&Token::RParen) {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            _ => self.comparison(),
        }
    }

    fn comparison(&mut self) -> Result<Predicate> {
        let Some(Token::Ident(param)) = self.peek().cloned() else {
            return Err(self.error("expected a parameter name"));
        };
        self.pos += 1;
        let Some(Token::Op(op)) = self.peek().cloned() else {
            return Err(self.error("expected a comparison operator"));
        };
        self.pos += 1;
        let value = match self.peek().cloned() {
            Some(Token::Num(x)) => Literal::Number(x),
            Some(Token::Str(s)) => Literal::Str(s),
            Some(Token::Ident(s)) if s == "true" || s == "TRUE" => Literal::Bool(true),
            Some(Token::Ident(s)) if s == "false" || s == "FALSE" => Literal::Bool(false),
            Some(Token::Ident(s)) => Literal::Str(s),
            _ => return Err(self.error("expected a literal")),
        };
        self.pos += 1;
        Ok(Predicate::Cmp { param, op, value })
    }
}
