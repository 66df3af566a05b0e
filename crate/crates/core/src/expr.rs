//! Arithmetic expressions over x, y, r, theta for analytic data in configs.

use std::fmt;

use thiserror::Error;

use crate::field::{ScalarField, VectorField};
use crate::geometry::{CornerFrame, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at line {line}, column {col}: expected {expected}")]
    SyntaxError { line: usize, col: usize, expected: String },
    #[error("unknown identifier `{name}` at line {line}, column {col}")]
    UnknownIdentifier { name: String, line: usize, col: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("evaluation domain error in {op}")]
pub struct EvalDomainError {
    pub op: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    R,
    Theta,
    Pi,
    Omega1,
    Omega2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Atan2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldExpr {
    Num(f64),
    Var(Var),
    Neg(Box<FieldExpr>),
    Bin(BinOp, Box<FieldExpr>, Box<FieldExpr>),
    Call(Func, Vec<FieldExpr>),
}

impl Var {
    fn from_name(s: &str) -> Option<Var> {
        Some(match s {
            "x" => Var::X,
            "y" => Var::Y,
            "r" => Var::R,
            "theta" => Var::Theta,
            "pi" => Var::Pi,
            "omega1" => Var::Omega1,
            "omega2" => Var::Omega2,
            _ => return None,
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::R => "r",
            Var::Theta => "theta",
            Var::Pi => "pi",
            Var::Omega1 => "omega1",
            Var::Omega2 => "omega2",
        }
    }
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "atan2" => Func::Atan2,
            _ => return None,
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Atan2 => "atan2",
        }
    }

    fn arity(&self) -> usize {
        if *self == Func::Atan2 {
            2
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { chars: src.chars().collect(), pos: 0, line: 1, col: 1, _src: src }
    }

    fn bump(&mut self) -> Option<char> {
        let c = *self.chars.get(self.pos)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>, ExprError> {
        let mut out = Vec::new();
        loop {
            while self.peek().is_some_and(|c| c.is_whitespace()) {
                self.bump();
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push((Tok::End, line, col));
                return Ok(out);
            };
            if c.is_ascii_digit() || c == '.' {
                let mut s = String::new();
                while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
                    s.push(self.bump().unwrap());
                }
                if self.peek().is_some_and(|c| c == 'e' || c == 'E') {
                    let save = (self.pos, self.line, self.col);
                    let mut e = String::from(self.bump().unwrap());
                    if self.peek().is_some_and(|c| c == '+' || c == '-') {
                        e.push(self.bump().unwrap());
                    }
                    if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                            e.push(self.bump().unwrap());
                        }
                        s.push_str(&e);
                    } else {
                        (self.pos, self.line, self.col) = save;
                    }
                }
                let v = s
                    .parse::<f64>()
                    .map_err(|_| ExprError::SyntaxError { line, col, expected: "a number".into() })?;
                out.push((Tok::Num(v), line, col));
            } else if c.is_alphabetic() || c == '_' {
                let mut s = String::new();
                while self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
                    s.push(self.bump().unwrap());
                }
                out.push((Tok::Ident(s), line, col));
            } else {
                self.bump();
                let t = match c {
                    '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    _ => {
                        return Err(ExprError::SyntaxError { line, col, expected: "an operator, number or identifier".into() })
                    }
                };
                out.push((t, line, col));
            }
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn next(&mut self) -> (Tok, usize, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> ExprError {
        let (_, line, col) = self.toks[self.pos];
        ExprError::SyntaxError { line, col, expected: expected.into() }
    }

    fn expr(&mut self) -> Result<FieldExpr, ExprError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            self.next();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = FieldExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<FieldExpr, ExprError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            self.next();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = FieldExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<FieldExpr, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.next();
            return Ok(FieldExpr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<FieldExpr, ExprError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.next();
            let exp = self.unary()?;
            return Ok(FieldExpr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<FieldExpr, ExprError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.next();
                Ok(FieldExpr::Num(v))
            }
            Tok::LParen => {
                self.next();
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.err("`)`"));
                }
                self.next();
                Ok(e)
            }
            Tok::Ident(name) => {
                let (_, line, col) = self.next();
                if *self.peek() == Tok::LParen {
                    let f = Func::from_name(&name).ok_or(ExprError::UnknownIdentifier { name: name.clone(), line, col })?;
                    self.next();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.next();
                        args.push(self.expr()?);
                    }
                    if args.len() != f.arity() {
                        return Err(self.err(&format!("{} argument(s) for {}", f.arity(), f.name())));
                    }
                    if *self.peek() != Tok::RParen {
                        return Err(self.err("`)`"));
                    }
                    self.next();
                    Ok(FieldExpr::Call(f, args))
                } else {
                    Var::from_name(&name)
                        .map(FieldExpr::Var)
                        .ok_or(ExprError::UnknownIdentifier { name, line, col })
                }
            }
            _ => Err(self.err("a number, identifier or `(`")),
        }
    }
}

pub fn parse(text: &str) -> Result<FieldExpr, ExprError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.err("an operator or end of input"));
    }
    Ok(e)
}

/// Variable bindings for evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    pub theta: f64,
    pub omega1: f64,
    pub omega2: f64,
}

impl EvalContext {
    pub fn at(p: Point, frame: &CornerFrame) -> Self {
        EvalContext { x: p[0], y: p[1], r: p[0].hypot(p[1]), theta: frame.theta(p), omega1: frame.omega1, omega2: frame.omega2 }
    }
}

fn check(v: f64, op: &'static str) -> Result<f64, EvalDomainError> {
    if v.is_nan() {
        Err(EvalDomainError { op })
    } else {
        Ok(v)
    }
}

impl FieldExpr {
    pub fn eval_ctx(&self, c: &EvalContext) -> Result<f64, EvalDomainError> {
        Ok(match self {
            FieldExpr::Num(v) => *v,
            FieldExpr::Var(v) => match v {
                Var::X => c.x,
                Var::Y => c.y,
                Var::R => c.r,
                Var::Theta => c.theta,
                Var::Pi => std::f64::consts::PI,
                Var::Omega1 => c.omega1,
                Var::Omega2 => c.omega2,
            },
            FieldExpr::Neg(e) => -e.eval_ctx(c)?,
            FieldExpr::Bin(op, a, b) => {
                let (a, b) = (a.eval_ctx(c)?, b.eval_ctx(c)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalDomainError { op: "division" });
                        }
                        a / b
                    }
                    BinOp::Pow => check(a.powf(b), "power")?,
                }
            }
            FieldExpr::Call(f, args) => {
                let a = args[0].eval_ctx(c)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => a.tan(),
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if !(a > 0.0) {
                            return Err(EvalDomainError { op: "log" });
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalDomainError { op: "sqrt" });
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Atan2 => a.atan2(args[1].eval_ctx(c)?),
                }
            }
        })
    }

    /// Evaluates at a point with r and theta taken in the corner frame.
    pub fn eval(&self, x: f64, y: f64, frame: &CornerFrame) -> Result<f64, EvalDomainError> {
        self.eval_ctx(&EvalContext::at([x, y], frame))
    }

    fn prec(&self) -> u8 {
        match self {
            FieldExpr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            FieldExpr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            FieldExpr::Neg(_) => 3,
            FieldExpr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

struct Wrap<'a>(&'a FieldExpr, bool);

impl fmt::Display for Wrap<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Canonical printing with the minimal parentheses that preserve the tree.
impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldExpr::Num(v) => write!(f, "{v:?}"),
            FieldExpr::Var(v) => write!(f, "{}", v.name()),
            FieldExpr::Neg(e) => write!(f, "-{}", Wrap(e, e.prec() < 3)),
            FieldExpr::Bin(op, a, b) => {
                let p = self.prec();
                let (sym, lp, rp) = match op {
                    BinOp::Add => (" + ", a.prec() < p, b.prec() <= p),
                    BinOp::Sub => (" - ", a.prec() < p, b.prec() <= p),
                    BinOp::Mul => (" * ", a.prec() < p, b.prec() <= p),
                    BinOp::Div => (" / ", a.prec() < p, b.prec() <= p),
                    BinOp::Pow => ("^", a.prec() <= p, b.prec() < 3),
                };
                write!(f, "{}{}{}", Wrap(a, lp), sym, Wrap(b, rp))
            }
            FieldExpr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Scalar field backed by an expression; NaN where evaluation fails.
#[derive(Debug, Clone)]
pub struct ExprScalar {
    pub expr: FieldExpr,
    pub frame: CornerFrame,
}

impl ExprScalar {
    pub fn try_eval(&self, p: Point) -> Result<f64, EvalDomainError> {
        self.expr.eval(p[0], p[1], &self.frame)
    }
}

impl ScalarField for ExprScalar {
    fn eval(&self, p: Point) -> f64 {
        self.try_eval(p).unwrap_or(f64::NAN)
    }
}

/// Vector field from a pair of scalar expressions.
#[derive(Debug, Clone)]
pub struct ExprVector {
    pub x: FieldExpr,
    pub y: FieldExpr,
    pub frame: CornerFrame,
}

impl ExprVector {
    pub fn try_eval(&self, p: Point) -> Result<Point, EvalDomainError> {
        Ok([self.x.eval(p[0], p[1], &self.frame)?, self.y.eval(p[0], p[1], &self.frame)?])
    }
}

impl VectorField for ExprVector {
    fn eval(&self, p: Point) -> Point {
        self.try_eval(p).unwrap_or([f64::NAN, f64::NAN])
    }
}

/// Finite-difference check of a claimed partial derivative at sample points.
/// Returns the worst relative mismatch (relative to max(1, |d|)).
pub fn check_derivative(f: &FieldExpr, df: &FieldExpr, wrt_x: bool, points: &[Point], frame: &CornerFrame) -> Result<f64, EvalDomainError> {
    let mut worst: f64 = 0.0;
    for p in points {
        let h = 1e-5 * (1.0 + p[0].abs().max(p[1].abs()));
        let (dx, dy) = if wrt_x { (h, 0.0) } else { (0.0, h) };
        let fp = f.eval(p[0] + dx, p[1] + dy, frame)?;
        let fm = f.eval(p[0] - dx, p[1] - dy, frame)?;
        let fd = (fp - fm) / (2.0 * h);
        let d = df.eval(p[0], p[1], frame)?;
        worst = worst.max((fd - d).abs() / d.abs().max(1.0));
    }
    Ok(worst)
}
