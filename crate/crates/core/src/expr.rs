//! A small arithmetic expression language over the coordinates `x1..xn`.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' '-'? INTEGER)*
//! atom    := NUMBER | 'x' INDEX | '(' sum ')'
//! ```
//!
//! Binary operators associate to the left, so `x1^2^3` is `(x1^2)^3` and `-x1^2` is
//! `-(x1^2)`. Exponents are integer literals.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::dual::DualVector;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// A non-negative literal. Negative values are written as `Neg(Const)`.
    Const(f64),
    /// Zero-based coordinate index (`x1` is `Var(0)`).
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken,
    UnexpectedEnd,
    InvalidNumber,
    InvalidExponent,
    UnknownVariable(usize),
}

/// Syntax error with the byte offset where it was detected.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at position {position}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character '{c}'"),
            ParseErrorKind::UnexpectedToken => f.write_str("unexpected token"),
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            ParseErrorKind::InvalidNumber => f.write_str("invalid number"),
            ParseErrorKind::InvalidExponent => f.write_str("exponent must be an integer literal"),
            ParseErrorKind::UnknownVariable(i) => write!(f, "unknown variable x{i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
}

/// Scalar types an [`Expr`] can be evaluated over.
pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn lift(c: f64, like: &Self) -> Self;
    fn value(&self) -> f64;
    fn powi(&self, k: i32) -> Self;
}

impl Scalar for f64 {
    fn lift(c: f64, _: &Self) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn powi(&self, k: i32) -> Self {
        libm::pow(*self, k as f64)
    }
}

impl Scalar for DualVector {
    fn lift(c: f64, like: &Self) -> Self {
        DualVector::constant(c, like.dim())
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn powi(&self, k: i32) -> Self {
        DualVector::powi(self, k)
    }
}

impl Expr {
    /// Parses `text`, accepting variables `x1..x{dim}`.
    pub fn parse(text: &str, dim: usize) -> Result<Expr, ParseError> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0, dim, end: text.len() };
        let e = p.sum()?;
        match p.peek() {
            None => Ok(e),
            Some(t) => Err(ParseError { kind: ParseErrorKind::UnexpectedToken, position: t.pos }),
        }
    }

    /// Largest zero-based variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Pow(a, _) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.eval_with(x, &0.0)
    }

    /// Value and exact gradient at `x`.
    pub fn eval_dual(&self, x: &[f64]) -> Result<DualVector, EvalError> {
        let n = x.len();
        let vars: Vec<DualVector> =
            x.iter().enumerate().map(|(i, v)| DualVector::variable(*v, i, n)).collect();
        self.eval_with(&vars, &DualVector::constant(0.0, n))
    }

    /// Evaluates over any [`Scalar`]; `like` fixes the shape of lifted constants.
    pub fn eval_with<S: Scalar>(&self, vars: &[S], like: &S) -> Result<S, EvalError> {
        Ok(match self {
            Expr::Const(c) => S::lift(*c, like),
            Expr::Var(i) => vars[*i].clone(),
            Expr::Neg(a) => -a.eval_with(vars, like)?,
            Expr::Add(a, b) => a.eval_with(vars, like)? + b.eval_with(vars, like)?,
            Expr::Sub(a, b) => a.eval_with(vars, like)? - b.eval_with(vars, like)?,
            Expr::Mul(a, b) => a.eval_with(vars, like)? * b.eval_with(vars, like)?,
            Expr::Div(a, b) => {
                let num = a.eval_with(vars, like)?;
                let den = b.eval_with(vars, like)?;
                if den.value() == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            Expr::Pow(a, k) => {
                let base = a.eval_with(vars, like)?;
                if *k < 0 && base.value() == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                base.powi(*k)
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(_) | Expr::Var(_) => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            f.write_str("(")?;
            self.fmt_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.fmt_at(f, 3)
            }
            Expr::Add(a, b) => binary(f, a, " + ", b, 1),
            Expr::Sub(a, b) => binary(f, a, " - ", b, 1),
            Expr::Mul(a, b) => binary(f, a, " * ", b, 2),
            Expr::Div(a, b) => binary(f, a, " / ", b, 2),
            Expr::Pow(a, k) => {
                a.fmt_at(f, 4)?;
                write!(f, "^{k}")
            }
        }
    }
}

fn binary(f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr, prec: u8) -> fmt::Result {
    a.fmt_at(f, prec)?;
    f.write_str(op)?;
    b.fmt_at(f, prec + 1)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64, bool),
    Var(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let simple = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, pos: start });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut integral = true;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                integral = false;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                integral = false;
                i += 1;
                if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                    i += 1;
                }
                let digits = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if digits == i {
                    return Err(ParseError { kind: ParseErrorKind::InvalidNumber, position: start });
                }
            }
            let value: f64 = text[start..i]
                .parse()
                .map_err(|_| ParseError { kind: ParseErrorKind::InvalidNumber, position: start })?;
            out.push(Token { tok: Tok::Num(value, integral), pos: start });
            continue;
        }
        if c == b'x' {
            i += 1;
            let digits = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if digits == i {
                return Err(ParseError { kind: ParseErrorKind::UnexpectedChar('x'), position: start });
            }
            let index: usize = text[digits..i]
                .parse()
                .map_err(|_| ParseError { kind: ParseErrorKind::UnknownVariable(usize::MAX), position: start })?;
            out.push(Token { tok: Tok::Var(index), pos: start });
            continue;
        }
        let ch = text[i..].chars().next().unwrap_or('?');
        return Err(ParseError { kind: ParseErrorKind::UnexpectedChar(ch), position: start });
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<Token, ParseError> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or(ParseError { kind: ParseErrorKind::UnexpectedEnd, position: self.end })?;
        self.pos += 1;
        Ok(t)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek().map(|t| &t.tok) == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat(&Tok::Minus) {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(&Tok::Star) {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(&Tok::Slash) {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.atom()?;
        while self.eat(&Tok::Caret) {
            let negative = self.eat(&Tok::Minus);
            let t = self.next()?;
            let k = match t.tok {
                Tok::Num(v, true) if v <= i32::MAX as f64 => v as i32,
                _ => return Err(ParseError { kind: ParseErrorKind::InvalidExponent, position: t.pos }),
            };
            base = Expr::Pow(Box::new(base), if negative { -k } else { k });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let t = self.next()?;
        match t.tok {
            Tok::Num(v, _) => Ok(Expr::Const(v)),
            Tok::Var(i) => {
                if i == 0 || i > self.dim {
                    Err(ParseError { kind: ParseErrorKind::UnknownVariable(i), position: t.pos })
                } else {
                    Ok(Expr::Var(i - 1))
                }
            }
            Tok::LParen => {
                let e = self.sum()?;
                let close = self.next()?;
                if close.tok != Tok::RParen {
                    return Err(ParseError { kind: ParseErrorKind::UnexpectedToken, position: close.pos });
                }
                Ok(e)
            }
            _ => Err(ParseError { kind: ParseErrorKind::UnexpectedToken, position: t.pos }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn b(e: Expr) -> Box<Expr> {
        Box::new(e)
    }

    #[test]
    fn parses_circle_with_precedence() {
        let e = Expr::parse("x1^2 + x2^2 - 4", 2).unwrap();
        let expected = Expr::Sub(
            b(Expr::Add(b(Expr::Pow(b(Expr::Var(0)), 2)), b(Expr::Pow(b(Expr::Var(1)), 2)))),
            b(Expr::Const(4.0)),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn single_variable() {
        assert_eq!(Expr::parse("x1", 1).unwrap(), Expr::Var(0));
    }

    #[test]
    fn out_of_range_variable() {
        let err = Expr::parse("x3", 2).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownVariable(3));
        assert_eq!(err.position, 0);
        assert!(Expr::parse("x0", 2).is_err());
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = Expr::parse("-x1^2", 1).unwrap();
        assert_eq!(e, Expr::Neg(b(Expr::Pow(b(Expr::Var(0)), 2))));
        assert_eq!(e.eval(&[3.0]).unwrap(), -9.0);
        let m = Expr::parse("2 * -x1", 1).unwrap();
        assert_eq!(m.eval(&[3.0]).unwrap(), -6.0);
    }

    #[test]
    fn left_associative_operators() {
        assert_eq!(Expr::parse("8 - 3 - 2", 1).unwrap().eval(&[0.0]).unwrap(), 3.0);
        assert_eq!(Expr::parse("8 / 4 / 2", 1).unwrap().eval(&[0.0]).unwrap(), 1.0);
        assert_eq!(Expr::parse("x1^2^3", 1).unwrap().eval(&[2.0]).unwrap(), 64.0);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = Expr::parse("x1 + * x2", 2).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedToken);
        assert_eq!(e.position, 5);
        assert_eq!(Expr::parse("(x1 + 1", 1).unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(Expr::parse("x1^1.5", 1).unwrap_err().kind, ParseErrorKind::InvalidExponent);
        assert_eq!(Expr::parse("x1 $ 2", 1).unwrap_err().kind, ParseErrorKind::UnexpectedChar('$'));
        assert_eq!(Expr::parse("x1 x1", 1).unwrap_err().position, 3);
    }

    #[test]
    fn division_by_zero_is_reported() {
        let e = Expr::parse("1 / x1", 1).unwrap();
        assert_eq!(e.eval(&[0.0]), Err(EvalError::DivisionByZero));
        let p = Expr::parse("x1^-2", 1).unwrap();
        assert_eq!(p.eval(&[0.0]), Err(EvalError::DivisionByZero));
        assert_eq!(p.eval(&[2.0]).unwrap(), 0.25);
    }

    #[test]
    fn dual_gradient_of_rational_expression() {
        let e = Expr::parse("x1 * x2 / (1 + x1^2)", 2).unwrap();
        let d = e.eval_dual(&[1.0, 3.0]).unwrap();
        assert!((d.value - 1.5).abs() < 1e-15);
        // d/dx1 = x2 (1 - x1^2) / (1 + x1^2)^2 = 0 at x1 = 1
        assert!(d.partials[0].abs() < 1e-15);
        assert!((d.partials[1] - 0.5).abs() < 1e-15);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Const),
            (0usize..3).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
                (inner, -4i32..5).prop_map(|(a, k)| Expr::Pow(Box::new(a), k)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(e in arb_expr()) {
            let text = e.to_string();
            let back = Expr::parse(&text, 3).unwrap();
            prop_assert_eq!(back, e);
        }
    }
}
