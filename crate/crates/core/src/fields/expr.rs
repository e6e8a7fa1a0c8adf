//! Arithmetic expressions over named coordinates.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?
//! primary := number | ident | func "(" expr ")" | "(" expr ")"
//! func    := "sin" | "cos" | "exp" | "log" | "sqrt"
//! number  := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so `-q^2`
//! is `-(q^2)` and `2^-1` is `2^(-1)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::dual::Scalar;
use crate::error::{Error, Result};

const FUNCTIONS: [&str; 5] = ["sin", "cos", "exp", "log", "sqrt"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn precedence(&self) -> u8 {
        match self {
            Node::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Node::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Node::Neg(_) => 3,
            Node::Bin(BinOp::Pow, ..) => 4,
            Node::Num(v) if *v < 0.0 => 3,
            _ => 5,
        }
    }

    /// Exponent free of coordinates whose value is an integer, e.g. `2`,
    /// `-3` or `3^2`.
    fn integer_literal(&self) -> Option<i64> {
        if self.has_variables() {
            return None;
        }
        let v: f64 = self.eval(&[]).ok()?;
        (v.fract() == 0.0 && v.abs() <= i32::MAX as f64).then_some(v as i64)
    }

    fn has_variables(&self) -> bool {
        match self {
            Node::Num(_) => false,
            Node::Var(_) => true,
            Node::Neg(a) | Node::Call(_, a) => a.has_variables(),
            Node::Bin(_, a, b) => a.has_variables() || b.has_variables(),
        }
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Result<S> {
        let out = match self {
            Node::Num(v) => S::constant(*v),
            Node::Var(i) => x[*i],
            Node::Neg(a) => -a.eval(x)?,
            Node::Bin(op, a, b) => {
                let lhs = a.eval(x)?;
                if *op == BinOp::Pow {
                    return pow(lhs, b, x);
                }
                let rhs = b.eval(x)?;
                match op {
                    BinOp::Add => lhs + rhs,
                    BinOp::Sub => lhs - rhs,
                    BinOp::Mul => lhs * rhs,
                    BinOp::Div => {
                        if rhs.re() == 0.0 {
                            return Err(Error::domain("division by zero"));
                        }
                        lhs / rhs
                    }
                    BinOp::Pow => unreachable!(),
                }
            }
            Node::Call(f, a) => {
                let v = a.eval(x)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Log => {
                        if v.re() <= 0.0 {
                            return Err(Error::domain(format!("log of non-positive value {}", v.re())));
                        }
                        v.ln()
                    }
                    Func::Sqrt => {
                        if v.re() < 0.0 {
                            return Err(Error::domain(format!("sqrt of negative value {}", v.re())));
                        }
                        v.sqrt()
                    }
                }
            }
        };
        if !out.re().is_finite() {
            return Err(Error::domain("non-finite intermediate value"));
        }
        Ok(out)
    }

    fn uses_var(&self, k: usize) -> bool {
        match self {
            Node::Num(_) => false,
            Node::Var(i) => *i == k,
            Node::Neg(a) | Node::Call(_, a) => a.uses_var(k),
            Node::Bin(_, a, b) => a.uses_var(k) || b.uses_var(k),
        }
    }
}

fn pow<S: Scalar>(base: S, exponent: &Node, x: &[S]) -> Result<S> {
    if let Some(n) = exponent.integer_literal() {
        if n < 0 && base.re() == 0.0 {
            return Err(Error::domain("zero raised to a negative power"));
        }
        return Ok(base.powi(n));
    }
    if base.re() <= 0.0 {
        return Err(Error::domain(format!(
            "non-integer power of non-positive base {}",
            base.re()
        )));
    }
    let e = exponent.eval(x)?;
    Ok((e * base.ln()).exp())
}

/// A parsed expression together with the coordinate names it refers to.
#[derive(Debug, Clone)]
pub struct Expression {
    root: Node,
    coords: Arc<[String]>,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.coords == other.coords
    }
}

pub fn validate_coordinates(coords: &[String]) -> Result<()> {
    if coords.is_empty() {
        return Err(Error::Coordinates("no coordinates declared".into()));
    }
    for (i, name) in coords.iter().enumerate() {
        let mut chars = name.chars();
        let ok = chars
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !ok {
            return Err(Error::Coordinates(format!("`{name}` is not an identifier")));
        }
        if FUNCTIONS.contains(&name.as_str()) {
            return Err(Error::Coordinates(format!("`{name}` is a reserved function name")));
        }
        if coords[..i].contains(name) {
            return Err(Error::Coordinates(format!("`{name}` declared twice")));
        }
    }
    Ok(())
}

impl Expression {
    pub fn parse(text: &str, coords: &[String]) -> Result<Self> {
        validate_coordinates(coords)?;
        Self::parse_shared(text, coords.into())
    }

    pub(crate) fn parse_shared(text: &str, coords: Arc<[String]>) -> Result<Self> {
        let tokens = lex(text)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            coords: &coords,
        };
        let root = parser.expr()?;
        let tok = parser.peek();
        if tok.kind != Tok::End {
            return Err(Error::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", tok.kind.describe()),
            });
        }
        Ok(Self { root, coords })
    }

    pub fn from_node(root: Node, coords: Arc<[String]>) -> Self {
        Self { root, coords }
    }

    pub fn constant(value: f64, coords: Arc<[String]>) -> Self {
        Self::from_node(Node::Num(value), coords)
    }

    pub fn variable(index: usize, coords: Arc<[String]>) -> Self {
        assert!(index < coords.len(), "coordinate index out of range");
        Self::from_node(Node::Var(index), coords)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn coordinates(&self) -> &Arc<[String]> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// True when the expression contains no coordinate reference.
    pub fn is_constant(&self) -> bool {
        (0..self.dim()).all(|k| !self.root.uses_var(k))
    }

    pub fn eval<S: Scalar>(&self, x: &[S]) -> Result<S> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        self.root.eval(x)
    }

    fn combine(self, op: BinOp, rhs: Expression) -> Expression {
        assert_eq!(self.coords, rhs.coords, "expressions over different coordinates");
        Expression {
            root: Node::Bin(op, Box::new(self.root), Box::new(rhs.root)),
            coords: self.coords,
        }
    }

    pub fn powi(self, n: i64) -> Expression {
        let exp = if n < 0 {
            Node::Neg(Box::new(Node::Num(-(n as f64))))
        } else {
            Node::Num(n as f64)
        };
        Expression {
            root: Node::Bin(BinOp::Pow, Box::new(self.root), Box::new(exp)),
            coords: self.coords,
        }
    }

    pub fn call(self, f: Func) -> Expression {
        Expression {
            root: Node::Call(f, Box::new(self.root)),
            coords: self.coords,
        }
    }

    pub fn scale(self, c: f64) -> Expression {
        let coords = self.coords.clone();
        Expression::constant(c, coords) * self
    }
}

impl Add for Expression {
    type Output = Expression;
    fn add(self, rhs: Expression) -> Expression {
        self.combine(BinOp::Add, rhs)
    }
}

impl Sub for Expression {
    type Output = Expression;
    fn sub(self, rhs: Expression) -> Expression {
        self.combine(BinOp::Sub, rhs)
    }
}

impl Mul for Expression {
    type Output = Expression;
    fn mul(self, rhs: Expression) -> Expression {
        self.combine(BinOp::Mul, rhs)
    }
}

impl Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression {
            root: Node::Neg(Box::new(self.root)),
            coords: self.coords,
        }
    }
}

// Canonical printer: minimal parentheses given the grammar's precedences.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.coords)
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, node: &Node, coords: &[String], parens: bool) -> fmt::Result {
    if parens {
        f.write_str("(")?;
        write_node(f, node, coords)?;
        f.write_str(")")
    } else {
        write_node(f, node, coords)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, coords: &[String]) -> fmt::Result {
    match node {
        Node::Num(v) if *v < 0.0 => write!(f, "-{}", -v),
        Node::Num(v) => write!(f, "{v}"),
        Node::Var(i) => f.write_str(&coords[*i]),
        Node::Neg(a) => {
            f.write_str("-")?;
            write_child(f, a, coords, a.precedence() < 3)
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a, coords)?;
            f.write_str(")")
        }
        Node::Bin(BinOp::Pow, a, b) => {
            write_child(f, a, coords, a.precedence() <= 4)?;
            f.write_str("^")?;
            write_child(f, b, coords, b.precedence() < 3)
        }
        Node::Bin(op, a, b) => {
            let prec = node.precedence();
            let sym = match op {
                BinOp::Add => " + ",
                BinOp::Sub => " - ",
                BinOp::Mul => "*",
                BinOp::Div => "/",
                BinOp::Pow => unreachable!(),
            };
            write_child(f, a, coords, a.precedence() < prec)?;
            f.write_str(sym)?;
            write_child(f, b, coords, b.precedence() <= prec)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("malformed number `{lit}`"),
                })?;
                out.push(Token {
                    kind: Tok::Num(v),
                    offset: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: Tok::Ident(text[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        i += 1;
        out.push(Token { kind, offset: start });
    }
    out.push(Token {
        kind: Tok::End,
        offset: text.len(),
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    coords: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != Tok::End {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, kind: Tok) -> Result<()> {
        let tok = self.next();
        if tok.kind != kind {
            return Err(Error::Syntax {
                offset: tok.offset,
                message: format!("expected {}, found {}", kind.describe(), tok.kind.describe()),
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().kind {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek().kind == Tok::Minus {
            self.next();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.peek().kind == Tok::Caret {
            self.next();
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        let tok = self.next();
        match tok.kind {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if self.peek().kind == Tok::LParen {
                    let func = Func::from_name(&name).ok_or(Error::UnknownIdentifier {
                        name,
                        offset: tok.offset,
                    })?;
                    self.next();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                match self.coords.iter().position(|c| *c == name) {
                    Some(i) => Ok(Node::Var(i)),
                    None => Err(Error::UnknownIdentifier {
                        name,
                        offset: tok.offset,
                    }),
                }
            }
            other => Err(Error::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp() -> Vec<String> {
        vec!["q".into(), "p".into()]
    }

    #[test]
    fn evaluates_harmonic() {
        let e = Expression::parse("(q^2+p^2)/2", &qp()).unwrap();
        assert_eq!(e.eval(&[1.0, 2.0]).unwrap(), 2.5);
    }

    #[test]
    fn polar_radius_squared() {
        let coords = vec!["r".to_string(), "phi".to_string()];
        let e = Expression::parse("r^2", &coords).unwrap();
        assert_eq!(e.eval(&[3.0, 0.4]).unwrap(), 9.0);
    }

    #[test]
    fn trailing_operator_is_syntax_error_at_end() {
        match Expression::parse("q*", &qp()) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_reports_name() {
        match Expression::parse("q + r", &qp()) {
            Err(Error::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "r");
                assert_eq!(offset, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Expression::parse("tan(q)", &qp()),
            Err(Error::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn unbalanced_parens() {
        assert!(matches!(
            Expression::parse("(q + p", &qp()),
            Err(Error::Syntax { offset: 6, .. })
        ));
        assert!(matches!(
            Expression::parse("q + p)", &qp()),
            Err(Error::Syntax { offset: 5, .. })
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        let c = qp();
        let e = |s: &str| Expression::parse(s, &c).unwrap().eval(&[2.0, 3.0]).unwrap();
        assert_eq!(e("-q^2"), -4.0);
        assert_eq!(e("2^3^2"), 512.0);
        assert_eq!(e("2^-1"), 0.5);
        assert_eq!(e("q - p - 1"), -2.0);
        assert_eq!(e("p / q / 3"), 0.5);
        assert_eq!(e("1.5e1 + 2E-1"), 15.2);
    }

    #[test]
    fn coordinate_validation() {
        assert!(validate_coordinates(&[]).is_err());
        assert!(validate_coordinates(&["q".into(), "q".into()]).is_err());
        assert!(validate_coordinates(&["1q".into()]).is_err());
        assert!(validate_coordinates(&["exp".into()]).is_err());
    }

    #[test]
    fn domain_violations() {
        let c = qp();
        let e = |s: &str, x: [f64; 2]| Expression::parse(s, &c).unwrap().eval(&x);
        assert!(matches!(e("log(q)", [0.0, 1.0]), Err(Error::Domain(_))));
        assert!(matches!(e("sqrt(q)", [-1.0, 1.0]), Err(Error::Domain(_))));
        assert!(matches!(e("p / q", [0.0, 1.0]), Err(Error::Domain(_))));
        assert!(matches!(e("q^0.5", [-1.0, 1.0]), Err(Error::Domain(_))));
        assert!(matches!(e("q^-1", [0.0, 1.0]), Err(Error::Domain(_))));
        assert!(matches!(e("exp(q)", [1000.0, 1.0]), Err(Error::Domain(_))));
        // integer exponents accept negative bases
        assert_eq!(e("q^3", [-2.0, 0.0]).unwrap(), -8.0);
        assert!((e("q^0.5", [4.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn printer_output() {
        let c = qp();
        let show = |s: &str| Expression::parse(s, &c).unwrap().to_string();
        assert_eq!(show("(q^2+p^2)/2"), "(q^2 + p^2)/2");
        assert_eq!(show("(-q)^2"), "(-q)^2");
        assert_eq!(show("-q^2"), "-q^2");
        assert_eq!(show("q-(p-1)"), "q - (p - 1)");
        assert_eq!(show("(q^p)^2"), "(q^p)^2");
        assert_eq!(show("2^(q+1)"), "2^(q + 1)");
        assert_eq!(show("sin(q)*cos(p)"), "sin(q)*cos(p)");
    }
}
