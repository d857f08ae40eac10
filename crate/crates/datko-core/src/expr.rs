//! A tiny expression language for time-dependent coefficients: the
//! single variable `t`, arithmetic, `^`, and sin/cos/exp/abs.
//!
//! The grammar is deliberately small so that every coefficient a family
//! definition can contain stays auditable by eye.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

// Unused when a dependency turns on num-traits/std: inherent methods win.
#[allow(unused_imports)]
use num_traits::Float;

use crate::CoreError;

/// Expression tree over the time variable `t`.
///
/// Parser-produced constants are finite and nonnegative; a negative
/// literal like `-2` parses as `Neg(Const(2))`. Printing a tree with
/// `Display` and reparsing it reproduces the tree exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// The free variable `t`.
    Time,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Abs(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    /// Unexpected input; `offset` is a byte offset into the source.
    Syntax { offset: usize, expected: &'static str },
    UnknownIdentifier { offset: usize, name: String },
    /// A function was called with the wrong number of arguments.
    ArityMismatch { offset: usize, name: String, got: usize },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Syntax { offset, expected } => {
                write!(f, "expected {expected} at byte {offset}")
            }
            ParseError::UnknownIdentifier { offset, name } => {
                write!(f, "unknown identifier `{name}` at byte {offset}")
            }
            ParseError::ArityMismatch { offset, name, got } => {
                write!(f, "`{name}` takes 1 argument, got {got} (at byte {offset})")
            }
        }
    }
}

impl core::error::Error for ParseError {}

/// Parses an expression in the coefficient grammar.
///
/// Precedence, loosest to tightest: `+ -`, `* /`, unary `-`, `^`
/// (right-associative, binding tighter than unary minus on its left,
/// so `-t^2` is `-(t^2)`).
pub fn parse_generator(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(source);
    let e = p.expr()?;
    match p.peek() {
        Token::Eof => Ok(e),
        _ => Err(p.syntax("end of input")),
    }
}

impl Expr {
    /// Evaluates at time `t`. Division by an exact zero and values that
    /// leave the finite range are reported, per subexpression.
    pub fn eval(&self, t: f64) -> Result<f64, CoreError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Time => t,
            Expr::Neg(e) => -e.eval(t)?,
            Expr::Add(a, b) => a.eval(t)? + b.eval(t)?,
            Expr::Sub(a, b) => a.eval(t)? - b.eval(t)?,
            Expr::Mul(a, b) => a.eval(t)? * b.eval(t)?,
            Expr::Div(a, b) => {
                let d = b.eval(t)?;
                if d == 0.0 {
                    return Err(CoreError::DivisionByZero { t });
                }
                a.eval(t)? / d
            }
            Expr::Pow(a, b) => a.eval(t)?.powf(b.eval(t)?),
            Expr::Sin(e) => e.eval(t)?.sin(),
            Expr::Cos(e) => e.eval(t)?.cos(),
            Expr::Exp(e) => e.eval(t)?.exp(),
            Expr::Abs(e) => e.eval(t)?.abs(),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CoreError::NonFiniteValue { t })
        }
    }

    // Precedence level used for printing: atoms bind tightest.
    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, required: u8) -> fmt::Result {
        let mine = self.prec();
        if mine < required {
            write!(f, "(")?;
        }
        match self {
            Expr::Const(c) => write!(f, "{c}")?,
            Expr::Time => write!(f, "t")?,
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_at(f, 3)?;
            }
            Expr::Add(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " + ")?;
                b.fmt_at(f, 2)?;
            }
            Expr::Sub(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " - ")?;
                b.fmt_at(f, 2)?;
            }
            Expr::Mul(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, " * ")?;
                b.fmt_at(f, 3)?;
            }
            Expr::Div(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, " / ")?;
                b.fmt_at(f, 3)?;
            }
            Expr::Pow(a, b) => {
                a.fmt_at(f, 5)?;
                write!(f, "^")?;
                b.fmt_at(f, 3)?;
            }
            Expr::Sin(e) => {
                write!(f, "sin(")?;
                e.fmt_at(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Cos(e) => {
                write!(f, "cos(")?;
                e.fmt_at(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Exp(e) => {
                write!(f, "exp(")?;
                e.fmt_at(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Abs(e) => {
                write!(f, "abs(")?;
                e.fmt_at(f, 0)?;
                write!(f, ")")?;
            }
        }
        if mine < required {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(usize, usize), // byte range into the source
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Token,
    tok_off: usize,
    tok_err: Option<ParseError>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        let mut p = Parser { src, pos: 0, tok: Token::Eof, tok_off: 0, tok_err: None };
        p.bump();
        p
    }

    fn peek(&self) -> &Token {
        &self.tok
    }

    fn syntax(&self, expected: &'static str) -> ParseError {
        self.tok_err
            .clone()
            .unwrap_or(ParseError::Syntax { offset: self.tok_off, expected })
    }

    fn bump(&mut self) {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_off = self.pos;
        self.tok_err = None;
        if self.pos >= bytes.len() {
            self.tok = Token::Eof;
            return;
        }
        let c = bytes[self.pos];
        self.tok = match c {
            b'+' => {
                self.pos += 1;
                Token::Plus
            }
            b'-' => {
                self.pos += 1;
                Token::Minus
            }
            b'*' => {
                self.pos += 1;
                Token::Star
            }
            b'/' => {
                self.pos += 1;
                Token::Slash
            }
            b'^' => {
                self.pos += 1;
                Token::Caret
            }
            b'(' => {
                self.pos += 1;
                Token::LParen
            }
            b')' => {
                self.pos += 1;
                Token::RParen
            }
            b',' => {
                self.pos += 1;
                Token::Comma
            }
            b'0'..=b'9' | b'.' => self.scan_number(),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Token::Ident(start, self.pos)
            }
            _ => {
                self.tok_err =
                    Some(ParseError::Syntax { offset: self.pos, expected: "a token" });
                self.pos += 1;
                Token::Eof
            }
        };
    }

    fn scan_number(&mut self) -> Token {
        let bytes = self.src.as_bytes();
        let start = self.pos;
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < bytes.len() && bytes[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        // An exponent suffix only counts when digits follow; otherwise
        // the `e` starts an identifier like `exp`.
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let mut look = self.pos + 1;
            if look < bytes.len() && (bytes[look] == b'+' || bytes[look] == b'-') {
                look += 1;
            }
            if look < bytes.len() && bytes[look].is_ascii_digit() {
                self.pos = look;
                while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = &self.src[start..self.pos];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Token::Num(v),
            _ => {
                self.tok_err = Some(ParseError::Syntax {
                    offset: start,
                    expected: "a finite number",
                });
                Token::Eof
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Token::Plus => {
                    self.bump();
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.bump();
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Token::Star => {
                    self.bump();
                    acc = Expr::Mul(Box::new(acc), Box::new(self.unary()?));
                }
                Token::Slash => {
                    self.bump();
                    acc = Expr::Div(Box::new(acc), Box::new(self.unary()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek(), Token::Minus) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Token::Caret) {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Token::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Token::LParen => {
                self.bump();
                let inner = self.expr()?;
                if !matches!(self.peek(), Token::RParen) {
                    return Err(self.syntax("`)`"));
                }
                self.bump();
                Ok(inner)
            }
            Token::Ident(a, b) => {
                let off = self.tok_off;
                let name = &self.src[a..b];
                if name == "t" {
                    self.bump();
                    return Ok(Expr::Time);
                }
                let ctor: fn(Box<Expr>) -> Expr = match name {
                    "sin" => Expr::Sin,
                    "cos" => Expr::Cos,
                    "exp" => Expr::Exp,
                    "abs" => Expr::Abs,
                    _ => {
                        return Err(ParseError::UnknownIdentifier {
                            offset: off,
                            name: String::from(name),
                        })
                    }
                };
                self.bump();
                if !matches!(self.peek(), Token::LParen) {
                    return Err(self.syntax("`(` after function name"));
                }
                self.bump();
                let mut args = Vec::new();
                args.push(self.expr()?);
                while matches!(self.peek(), Token::Comma) {
                    self.bump();
                    args.push(self.expr()?);
                }
                if !matches!(self.peek(), Token::RParen) {
                    return Err(self.syntax("`)`"));
                }
                self.bump();
                if args.len() != 1 {
                    return Err(ParseError::ArityMismatch {
                        offset: off,
                        name: String::from(name),
                        got: args.len(),
                    });
                }
                Ok(ctor(Box::new(args.pop().expect("one argument"))))
            }
            _ => Err(self.syntax("a number, `t`, a function call, or `(`")),
        }
    }
}
