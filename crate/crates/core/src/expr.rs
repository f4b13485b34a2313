//! Complex-valued scalar expressions over the variables `x1..xd`:
//! parsing, evaluation and exact symbolic differentiation.
//!
//! The grammar is the usual precedence tower (`^` > unary `-` > `* /` >
//! `+ -`), `^` right-associative with non-negative integer exponents stored
//! exactly. Supported functions: `exp`, `sin`, `cos`, `sqrt`. The imaginary
//! unit is written `i` (also as a numeric suffix, `2.5i`). General powers
//! must be spelled through `exp`; this keeps differentiation total.
//!
//! ASTs are immutable (subtrees are shared through [`Arc`]) and every
//! operation here is pure, so expressions can be evaluated concurrently.

use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// AST node of a parsed expression. Variable indices are 1-based, matching
/// the surface syntax `x1..xd`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    /// 1-based variable index.
    Var(usize),
    Neg(Arc<Expr>),
    Exp(Arc<Expr>),
    Sin(Arc<Expr>),
    Cos(Arc<Expr>),
    Sqrt(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    /// Integer power with exponent ≥ 0 stored exactly.
    Pow(Arc<Expr>, u32),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("variable x{index} exceeds dimension {dim} (offset {offset})")]
    VariableOutOfRange {
        offset: usize,
        index: usize,
        dim: usize,
    },
    #[error("exponent at offset {offset} is not a non-negative integer")]
    NonIntegerExponent { offset: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero in `{subexpr}`")]
    DivisionByZero { subexpr: String },
    #[error("non-finite value produced by `{subexpr}`")]
    NonFinite { subexpr: String },
    #[error("point has dimension {got}, expression uses x{needed}")]
    DimensionMismatch { needed: usize, got: usize },
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    /// Numeric literal with an `i` suffix, e.g. `2i`, `0.5i`.
    Imag(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

/// Token plus 1-based character offset of its first character.
struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_offset: usize,
}

fn lex(text: &str) -> Result<Lexer, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        let off = i + 1; // 1-based
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                i += 1;
            }
            '+' => {
                toks.push((Tok::Plus, off));
                i += 1;
            }
            '-' | '−' => {
                toks.push((Tok::Minus, off));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, off));
                i += 1;
            }
            '/' => {
                toks.push((Tok::Slash, off));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, off));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, off));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, off));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // scientific notation
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v: f64 = s.parse().map_err(|_| ParseError::Syntax {
                    offset: off,
                    message: format!("malformed number `{s}`"),
                })?;
                // `2i` lexes as a single imaginary literal
                if i < chars.len() && chars[i] == 'i' {
                    let after = chars.get(i + 1).copied();
                    if !matches!(after, Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                        i += 1;
                        toks.push((Tok::Imag(v), off));
                        continue;
                    }
                }
                toks.push((Tok::Num(v), off));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                toks.push((Tok::Ident(s), off));
            }
            other => {
                return Err(ParseError::Syntax {
                    offset: off,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(Lexer {
        toks,
        pos: 0,
        end_offset: chars.len() + 1,
    })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }
    fn offset(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|&(_, o)| o)
            .unwrap_or(self.end_offset)
    }
    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }
}

// ---------------------------------------------------------------------------
// Parser (recursive descent)
// ---------------------------------------------------------------------------

struct Parser {
    lx: Lexer,
    dim: usize,
}

/// Parses `text` as an expression in the variables `x1..x{dim}`.
pub fn parse(text: &str, dim: usize) -> Result<Expr, ParseError> {
    let mut p = Parser {
        lx: lex(text)?,
        dim,
    };
    let e = p.sum()?;
    if let Some(_t) = p.lx.peek() {
        return Err(ParseError::Syntax {
            offset: p.lx.offset(),
            message: "trailing input".into(),
        });
    }
    Ok(e)
}

impl Parser {
    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.lx.peek() {
                Some(Tok::Plus) => {
                    self.lx.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Arc::new(lhs), Arc::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.lx.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Arc::new(lhs), Arc::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.lx.peek() {
                Some(Tok::Star) => {
                    self.lx.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Mul(Arc::new(lhs), Arc::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.lx.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Div(Arc::new(lhs), Arc::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.lx.peek(), Some(Tok::Minus)) {
            self.lx.bump();
            let inner = self.unary()?;
            return Ok(Expr::Neg(Arc::new(inner)));
        }
        if matches!(self.lx.peek(), Some(Tok::Plus)) {
            self.lx.bump();
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if matches!(self.lx.peek(), Some(Tok::Caret)) {
            self.lx.bump();
            let exp = self.exponent()?;
            return Ok(Expr::Pow(Arc::new(base), exp));
        }
        Ok(base)
    }

    /// Exponents are plain non-negative integer literals; a chain `a^b^c`
    /// folds right-associatively in the integers (`x^2^3` is `x^8`).
    fn exponent(&mut self) -> Result<u32, ParseError> {
        let off = self.lx.offset();
        match self.lx.bump() {
            Some((Tok::Num(v), _)) => {
                if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
                    return Err(ParseError::NonIntegerExponent { offset: off });
                }
                let base = v as u32;
                if matches!(self.lx.peek(), Some(Tok::Caret)) {
                    self.lx.bump();
                    let upper = self.exponent()?;
                    return base
                        .checked_pow(upper)
                        .ok_or(ParseError::NonIntegerExponent { offset: off });
                }
                Ok(base)
            }
            _ => Err(ParseError::NonIntegerExponent { offset: off }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let off = self.lx.offset();
        match self.lx.bump() {
            Some((Tok::Num(v), _)) => Ok(Expr::Const(Complex64::new(v, 0.0))),
            Some((Tok::Imag(v), _)) => Ok(Expr::Const(Complex64::new(0.0, v))),
            Some((Tok::LParen, _)) => {
                let e = self.sum()?;
                match self.lx.bump() {
                    Some((Tok::RParen, _)) => Ok(e),
                    _ => Err(ParseError::Syntax {
                        offset: self.lx.end_offset.min(self.lx.offset()),
                        message: "expected `)`".into(),
                    }),
                }
            }
            Some((Tok::Ident(name), _)) => self.ident(&name, off),
            Some((t, o)) => Err(ParseError::Syntax {
                offset: o,
                message: format!("unexpected token `{t:?}`"),
            }),
            None => Err(ParseError::Syntax {
                offset: off,
                message: "unexpected end of input".into(),
            }),
        }
    }

    fn ident(&mut self, name: &str, off: usize) -> Result<Expr, ParseError> {
        if name == "i" {
            return Ok(Expr::Const(Complex64::new(0.0, 1.0)));
        }
        if let Some(rest) = name.strip_prefix('x') {
            if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                let idx: usize = rest.parse().map_err(|_| ParseError::Syntax {
                    offset: off,
                    message: format!("malformed variable `{name}`"),
                })?;
                if idx == 0 || idx > self.dim {
                    return Err(ParseError::VariableOutOfRange {
                        offset: off,
                        index: idx,
                        dim: self.dim,
                    });
                }
                return Ok(Expr::Var(idx));
            }
        }
        let func = match name {
            "exp" => Expr::Exp as fn(Arc<Expr>) -> Expr,
            "sin" => Expr::Sin,
            "cos" => Expr::Cos,
            "sqrt" => Expr::Sqrt,
            _ => {
                return Err(ParseError::UnknownIdentifier {
                    offset: off,
                    name: name.to_string(),
                })
            }
        };
        match self.lx.bump() {
            Some((Tok::LParen, _)) => {
                let arg = self.sum()?;
                match self.lx.bump() {
                    Some((Tok::RParen, _)) => Ok(func(Arc::new(arg))),
                    _ => Err(ParseError::Syntax {
                        offset: self.lx.offset(),
                        message: "expected `)` after function argument".into(),
                    }),
                }
            }
            _ => Err(ParseError::Syntax {
                offset: off,
                message: format!("function `{name}` requires parentheses"),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

impl Expr {
    /// Largest variable index appearing in the expression (0 for constants).
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(k) => *k,
            Expr::Neg(a) | Expr::Exp(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Sqrt(a) => {
                a.max_var()
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
            Expr::Pow(a, _) => a.max_var(),
        }
    }

    /// Evaluates the expression at `x` (coordinates for `x1..xd`).
    /// Division by zero and non-finite intermediates are reported rather
    /// than silently propagated.
    pub fn eval(&self, x: &[f64]) -> Result<Complex64, EvalError> {
        let needed = self.max_var();
        if needed > x.len() {
            return Err(EvalError::DimensionMismatch {
                needed,
                got: x.len(),
            });
        }
        self.eval_unchecked(x)
    }

    fn eval_unchecked(&self, x: &[f64]) -> Result<Complex64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(k) => Complex64::new(x[*k - 1], 0.0),
            Expr::Neg(a) => -a.eval_unchecked(x)?,
            Expr::Exp(a) => a.eval_unchecked(x)?.exp(),
            Expr::Sin(a) => a.eval_unchecked(x)?.sin(),
            Expr::Cos(a) => a.eval_unchecked(x)?.cos(),
            Expr::Sqrt(a) => a.eval_unchecked(x)?.sqrt(),
            Expr::Add(a, b) => a.eval_unchecked(x)? + b.eval_unchecked(x)?,
            Expr::Sub(a, b) => a.eval_unchecked(x)? - b.eval_unchecked(x)?,
            Expr::Mul(a, b) => a.eval_unchecked(x)? * b.eval_unchecked(x)?,
            Expr::Div(a, b) => {
                let den = b.eval_unchecked(x)?;
                if den == Complex64::new(0.0, 0.0) {
                    return Err(EvalError::DivisionByZero {
                        subexpr: self.to_string(),
                    });
                }
                a.eval_unchecked(x)? / den
            }
            Expr::Pow(a, n) => int_pow(a.eval_unchecked(x)?, *n),
        };
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(EvalError::NonFinite {
                subexpr: self.to_string(),
            });
        }
        Ok(v)
    }

    /// Exact partial derivative with respect to `x{var}` (1-based), by the
    /// standard rules. Simplification is limited to 0/1 constant folding so
    /// derivative ASTs stay reproducible.
    pub fn differentiate(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => zero(),
            Expr::Var(k) => {
                if *k == var {
                    one()
                } else {
                    zero()
                }
            }
            Expr::Neg(a) => neg(a.differentiate(var)),
            Expr::Exp(a) => mul(a.differentiate(var), Expr::Exp(a.clone())),
            Expr::Sin(a) => mul(a.differentiate(var), Expr::Cos(a.clone())),
            Expr::Cos(a) => neg(mul(a.differentiate(var), Expr::Sin(a.clone()))),
            Expr::Sqrt(a) => {
                // d√f = f' / (2√f); valid away from the branch point, which
                // fields never differentiates through (|V| and friends are
                // assembled numerically there).
                let da = a.differentiate(var);
                div(
                    da,
                    mul(Expr::Const(Complex64::new(2.0, 0.0)), Expr::Sqrt(a.clone())),
                )
            }
            Expr::Add(a, b) => add(a.differentiate(var), b.differentiate(var)),
            Expr::Sub(a, b) => sub(a.differentiate(var), b.differentiate(var)),
            Expr::Mul(a, b) => add(
                mul_shared(a.differentiate(var), b.clone()),
                mul_shared(b.differentiate(var), a.clone()),
            ),
            Expr::Div(a, b) => {
                // (a/b)' = a'/b − a b'/b²
                let da = a.differentiate(var);
                let db = b.differentiate(var);
                sub(
                    div_shared(da, b.clone()),
                    div(
                        mul_shared(db, a.clone()),
                        Expr::Pow(b.clone(), 2),
                    ),
                )
            }
            Expr::Pow(a, n) => match n {
                0 => zero(),
                1 => a.differentiate(var),
                _ => {
                    // n a^(n-1) a'
                    let da = a.differentiate(var);
                    let lower = if *n == 2 {
                        (**a).clone()
                    } else {
                        Expr::Pow(a.clone(), n - 1)
                    };
                    mul(
                        mul(Expr::Const(Complex64::new(*n as f64, 0.0)), lower),
                        da,
                    )
                }
            },
        }
    }
}

fn int_pow(base: Complex64, n: u32) -> Complex64 {
    // binary exponentiation; deterministic for identical inputs
    let mut acc = Complex64::new(1.0, 0.0);
    let mut b = base;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

fn zero() -> Expr {
    Expr::Const(Complex64::new(0.0, 0.0))
}
fn one() -> Expr {
    Expr::Const(Complex64::new(1.0, 0.0))
}
fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == Complex64::new(0.0, 0.0))
}
fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == Complex64::new(1.0, 0.0))
}

fn neg(a: Expr) -> Expr {
    if is_zero(&a) {
        zero()
    } else {
        Expr::Neg(Arc::new(a))
    }
}
fn add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return b;
    }
    if is_zero(&b) {
        return a;
    }
    Expr::Add(Arc::new(a), Arc::new(b))
}
fn sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        return a;
    }
    if is_zero(&a) {
        return neg(b);
    }
    Expr::Sub(Arc::new(a), Arc::new(b))
}
fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        return zero();
    }
    if is_one(&a) {
        return b;
    }
    if is_one(&b) {
        return a;
    }
    Expr::Mul(Arc::new(a), Arc::new(b))
}
fn mul_shared(a: Expr, b: Arc<Expr>) -> Expr {
    if is_zero(&a) || is_zero(&*b) {
        return zero();
    }
    if is_one(&a) {
        return (*b).clone();
    }
    if is_one(&*b) {
        return a;
    }
    Expr::Mul(Arc::new(a), b)
}
fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return zero();
    }
    if is_one(&b) {
        return a;
    }
    Expr::Div(Arc::new(a), Arc::new(b))
}
fn div_shared(a: Expr, b: Arc<Expr>) -> Expr {
    if is_zero(&a) {
        return zero();
    }
    if is_one(&*b) {
        return a;
    }
    Expr::Div(Arc::new(a), b)
}

// ---------------------------------------------------------------------------
// Printer (the inverse of `parse` up to whitespace)
// ---------------------------------------------------------------------------

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

fn fmt_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if prec(e) < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.im == 0.0 {
                    if c.re < 0.0 {
                        write!(f, "({})", c.re)
                    } else {
                        write!(f, "{}", c.re)
                    }
                } else if c.re == 0.0 {
                    if c.im == 1.0 {
                        write!(f, "i")
                    } else if c.im < 0.0 {
                        write!(f, "({}i)", c.im)
                    } else {
                        write!(f, "{}i", c.im)
                    }
                } else {
                    write!(f, "({}+{}i)", c.re, c.im)
                }
            }
            Expr::Var(k) => write!(f, "x{k}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                fmt_child(f, a, 3)
            }
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
            Expr::Add(a, b) => {
                fmt_child(f, a, 1)?;
                write!(f, " + ")?;
                fmt_child(f, b, 2)
            }
            Expr::Sub(a, b) => {
                fmt_child(f, a, 1)?;
                write!(f, " - ")?;
                fmt_child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                fmt_child(f, a, 2)?;
                write!(f, "*")?;
                fmt_child(f, b, 3)
            }
            Expr::Div(a, b) => {
                fmt_child(f, a, 2)?;
                write!(f, "/")?;
                fmt_child(f, b, 3)
            }
            Expr::Pow(a, n) => {
                fmt_child(f, a, 5)?;
                write!(f, "^{n}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ev(text: &str, x: &[f64]) -> Complex64 {
        parse(text, x.len()).unwrap().eval(x).unwrap()
    }

    #[test]
    fn parses_and_evaluates_basic_arithmetic() {
        assert_eq!(ev("x1^2", &[2.0]), c(4.0, 0.0));
        assert_eq!(ev("-x1^2 + i*x1^3", &[1.0]), c(-1.0, 1.0));
        let e = ev("exp(x1^4)", &[1.0]);
        assert!((e - c(std::f64::consts::E, 0.0)).norm() < 1e-12);
        assert_eq!(ev("i*x1^3", &[2.0]), c(0.0, 8.0));
        assert_eq!(ev("exp(x1^2)", &[0.0]), c(1.0, 0.0));
        assert_eq!(ev("1/(1+x1^2)", &[1.0]), c(0.5, 0.0));
    }

    #[test]
    fn precedence_and_associativity() {
        // ^ binds tighter than unary minus: -x^2 = -(x^2)
        assert_eq!(ev("-x1^2", &[3.0]), c(-9.0, 0.0));
        assert_eq!(ev("2*x1^2", &[3.0]), c(18.0, 0.0));
        assert_eq!(ev("2^3^2", &[]), c(512.0, 0.0)); // right-assoc: 2^(3^2)
        assert_eq!(ev("1 - 2 - 3", &[]), c(-4.0, 0.0));
        assert_eq!(ev("12/2/3", &[]), c(2.0, 0.0));
        assert_eq!(ev("2.5i*2", &[]), c(0.0, 5.0));
        assert_eq!(ev("1e-2 + 1E2", &[]), c(100.01, 0.0));
    }

    #[test]
    fn parse_errors_carry_offsets() {
        match parse("x1 + @", 1) {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match parse("x3", 2) {
            Err(ParseError::VariableOutOfRange { index, dim, .. }) => {
                assert_eq!((index, dim), (3, 2));
            }
            other => panic!("expected range error, got {other:?}"),
        }
        assert!(matches!(
            parse("foo(x1)", 1),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse("x1^1.5", 1),
            Err(ParseError::NonIntegerExponent { .. })
        ));
        assert!(matches!(
            parse("x1^(-2)", 1),
            Err(ParseError::NonIntegerExponent { .. })
        ));
    }

    #[test]
    fn eval_reports_division_by_zero_and_overflow() {
        let e = parse("1/x1", 1).unwrap();
        assert!(matches!(
            e.eval(&[0.0]),
            Err(EvalError::DivisionByZero { .. })
        ));
        let e = parse("exp(exp(x1))", 1).unwrap();
        match e.eval(&[10.0]) {
            Err(EvalError::NonFinite { subexpr }) => assert!(subexpr.contains("exp")),
            other => panic!("expected overflow report, got {other:?}"),
        }
    }

    #[test]
    fn derivative_basic_rules() {
        let d = parse("x1^3", 1).unwrap().differentiate(1);
        assert_eq!(d.eval(&[2.0]).unwrap(), c(12.0, 0.0));

        let d = parse("exp(x1^2)", 1).unwrap().differentiate(1);
        // 2 x exp(x²) at x=1 → 2e
        let expected = 2.0 * std::f64::consts::E;
        assert!((d.eval(&[1.0]).unwrap() - c(expected, 0.0)).norm() < 1e-12);

        let d = parse("3.5", 1).unwrap().differentiate(1);
        assert_eq!(d, Expr::Const(c(0.0, 0.0)));

        // derivative in an absent variable is zero
        let d = parse("x1^2", 2).unwrap().differentiate(2);
        assert_eq!(d.eval(&[5.0, 7.0]).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn derivative_quotient_and_trig() {
        let e = parse("sin(x1)/x1", 1).unwrap();
        let d = e.differentiate(1);
        let x = 1.3_f64;
        let expected = (x.cos() * x - x.sin()) / (x * x);
        assert!((d.eval(&[x]).unwrap().re - expected).abs() < 1e-12);

        let e = parse("cos(x1^2)", 1).unwrap();
        let d = e.differentiate(1);
        let expected = -2.0 * x * (x * x).sin();
        assert!((d.eval(&[x]).unwrap().re - expected).abs() < 1e-12);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-3.0..3.0f64).prop_map(|v| Expr::Const(c(v, 0.0))),
            (-2.0..2.0f64).prop_map(|v| Expr::Const(c(0.0, v))),
            Just(Expr::Var(1)),
            Just(Expr::Var(2)),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Add(Arc::new(a), Arc::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Sub(Arc::new(a), Arc::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Mul(Arc::new(a), Arc::new(b))),
                inner.clone().prop_map(|a| Expr::Neg(Arc::new(a))),
                inner.clone().prop_map(|a| Expr::Sin(Arc::new(a))),
                inner.clone().prop_map(|a| Expr::Cos(Arc::new(a))),
                (inner.clone(), 0u32..4).prop_map(|(a, n)| Expr::Pow(Arc::new(a), n)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(e in arb_expr()) {
            let text = e.to_string();
            let reparsed = parse(&text, 2).unwrap();
            prop_assert_eq!(&reparsed, &e);
            // and printing again is a fixed point
            prop_assert_eq!(reparsed.to_string(), text);
        }

        #[test]
        fn derivative_matches_finite_differences(
            e in arb_expr(),
            x1 in -1.5..1.5f64,
            x2 in -1.5..1.5f64,
        ) {
            let d = e.differentiate(1);
            let h = 1e-5;
            let fp = e.eval(&[x1 + h, x2]);
            let fm = e.eval(&[x1 - h, x2]);
            let dv = d.eval(&[x1, x2]);
            if let (Ok(fp), Ok(fm), Ok(dv)) = (fp, fm, dv) {
                let fd = (fp - fm) / c(2.0 * h, 0.0);
                let scale = 1.0 + dv.norm() + fd.norm();
                prop_assert!(
                    (fd - dv).norm() <= 1e-6 * scale,
                    "fd={fd} sym={dv}"
                );
            }
        }
    }

    #[test]
    fn eval_is_deterministic() {
        let e = parse("exp(sin(x1)*cos(x1^2)) - i*x1/(1+x1^2)", 1).unwrap();
        let a = e.eval(&[0.7321]).unwrap();
        for _ in 0..10 {
            let b = e.eval(&[0.7321]).unwrap();
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }
}
