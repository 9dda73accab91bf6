//! Coefficient expressions over `x` and `lambda`.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'x' | 'lambda' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func  := sin | cos | exp | sqrt | abs
//! ```
//!
//! `^` binds tighter than unary minus and is right-associative, so `-x^2`
//! is `-(x^2)` and `2^3^2` is `2^(3^2)`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Function {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Function::Sin,
            "cos" => Function::Cos,
            "exp" => Function::Exp,
            "sqrt" => Function::Sqrt,
            "abs" => Function::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Exp => "exp",
            Function::Sqrt => "sqrt",
            Function::Abs => "abs",
        }
    }
}

/// Syntax tree. Byte offsets point into the source and are ignored by `==`.
#[derive(Debug, Clone)]
pub enum Expr {
    Number(f64),
    X,
    Lambda,
    Neg(Box<Expr>),
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr>, offset: usize },
    Call { func: Function, arg: Box<Expr>, offset: usize },
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Expr::Number(a), Expr::Number(b)) => a.to_bits() == b.to_bits(),
            (Expr::X, Expr::X) | (Expr::Lambda, Expr::Lambda) => true,
            (Expr::Neg(a), Expr::Neg(b)) => a == b,
            (Expr::Binary { op: o1, lhs: l1, rhs: r1, .. }, Expr::Binary { op: o2, lhs: l2, rhs: r2, .. }) => {
                o1 == o2 && l1 == l2 && r1 == r2
            }
            (Expr::Call { func: f1, arg: a1, .. }, Expr::Call { func: f2, arg: a2, .. }) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

impl Expr {
    pub fn depends_on_x(&self) -> bool {
        match self {
            Expr::Number(_) | Expr::Lambda => false,
            Expr::X => true,
            Expr::Neg(e) => e.depends_on_x(),
            Expr::Binary { lhs, rhs, .. } => lhs.depends_on_x() || rhs.depends_on_x(),
            Expr::Call { arg, .. } => arg.depends_on_x(),
        }
    }

    pub fn depends_on_lambda(&self) -> bool {
        match self {
            Expr::Number(_) | Expr::X => false,
            Expr::Lambda => true,
            Expr::Neg(e) => e.depends_on_lambda(),
            Expr::Binary { lhs, rhs, .. } => lhs.depends_on_lambda() || rhs.depends_on_lambda(),
            Expr::Call { arg, .. } => arg.depends_on_lambda(),
        }
    }

    pub fn eval(&self, x: f64, lambda: f64) -> Result<f64, EvalError> {
        match self {
            Expr::Number(v) => Ok(*v),
            Expr::X => Ok(x),
            Expr::Lambda => Ok(lambda),
            Expr::Neg(e) => Ok(-e.eval(x, lambda)?),
            Expr::Binary { op, lhs, rhs, offset } => {
                let a = lhs.eval(x, lambda)?;
                let b = rhs.eval(x, lambda)?;
                let v = match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError { kind: EvalErrorKind::DivideByZero, offset: *offset, x, lambda });
                        }
                        a / b
                    }
                    BinaryOp::Pow => a.powf(b),
                };
                finite(v, *offset, x, lambda)
            }
            Expr::Call { func, arg, offset } => {
                let a = arg.eval(x, lambda)?;
                let v = match func {
                    Function::Sin => a.sin(),
                    Function::Cos => a.cos(),
                    Function::Exp => a.exp(),
                    Function::Abs => a.abs(),
                    Function::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError { kind: EvalErrorKind::SqrtOfNegative, offset: *offset, x, lambda });
                        }
                        a.sqrt()
                    }
                };
                finite(v, *offset, x, lambda)
            }
        }
    }
}

fn finite(v: f64, offset: usize, x: f64, lambda: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError { kind: EvalErrorKind::NonFinite, offset, x, lambda })
    }
}

/// Fully parenthesized; parses back to an equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v:?}"),
            Expr::X => write!(f, "x"),
            Expr::Lambda => write!(f, "lambda"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary { op, lhs, rhs, .. } => write!(f, "({lhs}{}{rhs})", op.symbol()),
            Expr::Call { func, arg, .. } => write!(f, "{}({arg})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedCharacter(char),
    UnexpectedEnd,
    UnexpectedToken(String),
    UnknownIdentifier(String),
    InvalidNumber(String),
    ExpectedClosingParen,
    TrailingInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedCharacter(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected {t}"),
            ParseErrorKind::UnknownIdentifier(name) => write!(f, "unknown identifier {name:?}"),
            ParseErrorKind::InvalidNumber(s) => write!(f, "invalid number {s:?}"),
            ParseErrorKind::ExpectedClosingParen => write!(f, "expected ')'"),
            ParseErrorKind::TrailingInput => write!(f, "unexpected trailing input"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalErrorKind {
    DivideByZero,
    SqrtOfNegative,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind:?} at byte {offset} (x = {x}, lambda = {lambda})")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub offset: usize,
    pub x: f64,
    pub lambda: f64,
}

/// A parsed coefficient `p(x, λ)` together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientExpression {
    source: String,
    tree: Expr,
}

impl CoefficientExpression {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn tree(&self) -> &Expr {
        &self.tree
    }

    pub fn eval(&self, x: f64, lambda: f64) -> Result<f64, EvalError> {
        self.tree.eval(x, lambda)
    }

    pub fn constant(value: f64) -> Self {
        let tree = if value < 0.0 || (value == 0.0 && value.is_sign_negative()) {
            Expr::Neg(Box::new(Expr::Number(-value)))
        } else {
            Expr::Number(value)
        };
        Self { source: tree.to_string(), tree }
    }
}

impl fmt::Display for CoefficientExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tree)
    }
}

pub fn parse_expression(source: &str) -> Result<CoefficientExpression, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens: &tokens, pos: 0, end: source.len() };
    let tree = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(ParseError { kind: ParseErrorKind::TrailingInput, offset: t.offset });
    }
    Ok(CoefficientExpression { source: source.to_string(), tree })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn tokenize(s: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push(Token { tok: Tok::Op(c as char), offset: i });
                i += 1;
            }
            b'(' => {
                out.push(Token { tok: Tok::LParen, offset: i });
                i += 1;
            }
            b')' => {
                out.push(Token { tok: Tok::RParen, offset: i });
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
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
                let text = &s[start..i];
                match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => out.push(Token { tok: Tok::Number(v), offset: start }),
                    _ => {
                        return Err(ParseError { kind: ParseErrorKind::InvalidNumber(text.to_string()), offset: start })
                    }
                }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(s[start..i].to_string()), offset: start });
            }
            _ => {
                let ch = s[i..].chars().next().expect("in bounds");
                return Err(ParseError { kind: ParseErrorKind::UnexpectedCharacter(ch), offset: i });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<Token, ParseError> {
        let t = self.tokens.get(self.pos).cloned().ok_or(ParseError { kind: ParseErrorKind::UnexpectedEnd, offset: self.end })?;
        self.pos += 1;
        Ok(t)
    }

    fn peek_op(&self, ops: &[char]) -> Option<(char, usize)> {
        match self.peek() {
            Some(Token { tok: Tok::Op(c), offset }) if ops.contains(c) => Some((*c, *offset)),
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some((c, offset)) = self.peek_op(&['+', '-']) {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinaryOp::Add } else { BinaryOp::Sub };
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), offset };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some((c, offset)) = self.peek_op(&['*', '/']) {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinaryOp::Mul } else { BinaryOp::Div };
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), offset };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek_op(&['-']).is_some() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some((_, offset)) = self.peek_op(&['^']) {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Binary { op: BinaryOp::Pow, lhs: Box::new(base), rhs: Box::new(exponent), offset });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let t = self.next()?;
        match t.tok {
            Tok::Number(v) => Ok(Expr::Number(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.close_paren()?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::X),
                "lambda" => Ok(Expr::Lambda),
                "pi" => Ok(Expr::Number(std::f64::consts::PI)),
                _ => match Function::from_name(&name) {
                    Some(func) => {
                        match self.next()? {
                            Token { tok: Tok::LParen, .. } => {}
                            other => {
                                return Err(ParseError {
                                    kind: ParseErrorKind::UnexpectedToken(describe(&other.tok)),
                                    offset: other.offset,
                                })
                            }
                        }
                        let arg = self.expr()?;
                        self.close_paren()?;
                        Ok(Expr::Call { func, arg: Box::new(arg), offset: t.offset })
                    }
                    None => Err(ParseError { kind: ParseErrorKind::UnknownIdentifier(name), offset: t.offset }),
                },
            },
            other => Err(ParseError { kind: ParseErrorKind::UnexpectedToken(describe(&other)), offset: t.offset }),
        }
    }

    fn close_paren(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token { tok: Tok::RParen, .. }) => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(ParseError { kind: ParseErrorKind::ExpectedClosingParen, offset: t.offset }),
            None => Err(ParseError { kind: ParseErrorKind::ExpectedClosingParen, offset: self.end }),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Number(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier {s:?}"),
        Tok::Op(c) => format!("operator '{c}'"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
    }
}
