//! Arithmetic expressions for coefficient entries.
//!
//! Grammar, with `^` binding tighter than unary minus and associating to the
//! right:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'i' | 'pi' | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Variables are `x1 … xn`; other identifiers must be declared parameters.
//! Values are complex throughout.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
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
            Func::Abs => "abs",
        }
    }

    fn apply(self, z: C64) -> C64 {
        match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Exp => z.exp(),
            Func::Log => z.ln(),
            Func::Sqrt => z.sqrt(),
            Func::Abs => C64::new(z.norm(), 0.0),
        }
    }
}

/// Parsed expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(f64),
    Imag,
    Pi,
    /// Spatial coordinate `x{k}`, with k counted from 1.
    Var(usize),
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Expression for a complex constant, built only from nonnegative literals.
    pub fn constant(z: C64) -> Expr {
        let lit = |x: f64| {
            if x < 0.0 {
                Expr::Neg(Box::new(Expr::Number(-x)))
            } else {
                Expr::Number(x)
            }
        };
        if z.im == 0.0 {
            return lit(z.re);
        }
        let imag = Expr::Binary(BinOp::Mul, Box::new(lit(z.im)), Box::new(Expr::Imag));
        Expr::Binary(BinOp::Add, Box::new(lit(z.re)), Box::new(imag))
    }

    /// Product `z * self` as a new tree.
    pub fn scaled(&self, z: C64) -> Expr {
        Expr::Binary(BinOp::Mul, Box::new(Expr::constant(z)), Box::new(self.clone()))
    }

    /// Largest variable index referenced (0 if none).
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Var(k) => *k,
            Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
            _ => 0,
        }
    }

    /// Names of the parameters the expression refers to.
    pub fn params(&self, out: &mut Vec<String>) {
        match self {
            Expr::Param(name) => {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.params(out),
            Expr::Binary(_, a, b) => {
                a.params(out);
                b.params(out);
            }
            _ => {}
        }
    }

    /// Evaluates at the point `x` with the given parameter values.
    pub fn eval(&self, x: &[f64], params: &BTreeMap<String, f64>) -> Result<C64> {
        Ok(match self {
            Expr::Number(v) => C64::new(*v, 0.0),
            Expr::Imag => C64::new(0.0, 1.0),
            Expr::Pi => C64::new(PI, 0.0),
            Expr::Var(k) => {
                let v = x.get(k - 1).ok_or(Error::DimensionMismatch {
                    expected: *k,
                    got: x.len(),
                })?;
                C64::new(*v, 0.0)
            }
            Expr::Param(name) => {
                let v = params
                    .get(name)
                    .ok_or_else(|| Error::InvalidField(format!("parameter '{name}' has no value")))?;
                C64::new(*v, 0.0)
            }
            Expr::Neg(a) => C64::new(0.0, 0.0) - a.eval(x, params)?,
            Expr::Call(f, a) => f.apply(a.eval(x, params)?),
            Expr::Binary(op, a, b) => {
                let a = a.eval(x, params)?;
                let b = b.eval(x, params)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => power(a, b),
                }
            }
        })
    }
}

fn power(base: C64, exponent: C64) -> C64 {
    if exponent.im == 0.0 {
        let e = exponent.re;
        if e.fract() == 0.0 && e.abs() <= 1024.0 {
            return base.powi(e as i32);
        }
        if base.im == 0.0 && base.re >= 0.0 {
            return C64::new(base.re.powf(e), 0.0);
        }
    }
    base.powc(exponent)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v:?}"),
            Expr::Imag => write!(f, "i"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(k) => write!(f, "x{k}"),
            Expr::Param(name) => write!(f, "{name}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Binary(op, a, b) => write!(f, "({a}{}{b})", op.symbol()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == b'.' {
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
            let lexeme = &text[start..i];
            let v: f64 = lexeme.parse().map_err(|_| Error::Parse {
                offset: start,
                message: format!("malformed number '{lexeme}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    offset: start,
                    message: format!("number '{lexeme}' is out of range"),
                });
            }
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else {
            let tok = match c {
                b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b',' => Tok::Comma,
                _ => {
                    let ch = text[start..].chars().next().unwrap_or('?');
                    return Err(Error::Parse {
                        offset: start,
                        message: format!("unexpected character '{ch}'"),
                    });
                }
            };
            i += 1;
            out.push((tok, start));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    n: usize,
    params: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset,
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let offset = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return self.err(offset, "unexpected end of input");
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Number(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen(offset)?;
                Ok(inner)
            }
            Tok::Ident(name) => self.identifier(name, offset),
            Tok::RParen => self.err(offset, "unbalanced parentheses: unexpected ')'"),
            Tok::Comma => self.err(offset, "unexpected ','"),
            Tok::Op(c) => self.err(offset, format!("unexpected operator '{c}'")),
        }
    }

    fn expect_rparen(&mut self, open: usize) -> Result<()> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            Some(Tok::Comma) => self.err(self.offset(), "arity error: functions take exactly one argument"),
            _ => self.err(open, "unbalanced parentheses: '(' is never closed"),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Expr> {
        let called = matches!(self.peek(), Some(Tok::LParen));
        if let Some(func) = Func::from_name(&name) {
            if !called {
                return self.err(offset, format!("arity error: '{name}' needs one argument in parentheses"));
            }
            let open = self.offset();
            self.pos += 1;
            if let Some(Tok::RParen) = self.peek() {
                return self.err(self.offset(), format!("arity error: '{name}' needs one argument"));
            }
            let arg = self.expr()?;
            self.expect_rparen(open)?;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        if called {
            return self.err(offset, format!("unknown function '{name}'"));
        }
        match name.as_str() {
            "i" => return Ok(Expr::Imag),
            "pi" => return Ok(Expr::Pi),
            _ => {}
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                return match digits.parse::<usize>() {
                    Ok(k) if k >= 1 && k <= self.n => Ok(Expr::Var(k)),
                    _ => self.err(offset, format!("unknown variable '{name}' (dimension {})", self.n)),
                };
            }
        }
        if self.params.contains(&name.as_str()) {
            return Ok(Expr::Param(name));
        }
        self.err(offset, format!("unknown identifier '{name}'"))
    }
}

/// Parses `text` for an `n`-dimensional domain with the given parameter names.
pub fn parse_expr(text: &str, n: usize, params: &[&str]) -> Result<Expr> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(Error::Parse {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        toks,
        pos: 0,
        end: text.len(),
        n,
        params,
    };
    let expr = parser.expr()?;
    if parser.pos < parser.toks.len() {
        let offset = parser.offset();
        let message = match parser.peek() {
            Some(Tok::RParen) => "unbalanced parentheses: unexpected ')'".to_string(),
            Some(t) => format!("unexpected token {t:?}"),
            None => "trailing input".to_string(),
        };
        return Err(Error::Parse { offset, message });
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn eval_at(text: &str, x: &[f64]) -> C64 {
        parse_expr(text, x.len(), &[])
            .unwrap()
            .eval(x, &BTreeMap::new())
            .unwrap()
    }

    #[test]
    fn arithmetic_example() {
        assert_eq!(eval_at("1+2*x1", &[3.0]), C64::new(7.0, 0.0));
    }

    #[test]
    fn imaginary_sine_example() {
        let z = eval_at("i*sin(x1)", &[PI / 2.0]);
        assert_abs_diff_eq!(z.re, 0.0);
        assert_abs_diff_eq!(z.im, 1.0);
    }

    #[test]
    fn out_of_range_variable() {
        match parse_expr("x7", 2, &[]) {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, 0);
                assert!(message.contains("unknown variable"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval_at("-2^2", &[]), C64::new(-4.0, 0.0));
        assert_eq!(eval_at("2^3^2", &[]), C64::new(512.0, 0.0));
        assert_eq!(eval_at("2^-1", &[]), C64::new(0.5, 0.0));
        assert_eq!(eval_at("8/2/2", &[]), C64::new(2.0, 0.0));
        assert_eq!(eval_at("1-2-3", &[]), C64::new(-4.0, 0.0));
        assert_eq!(eval_at("2*-3", &[]), C64::new(-6.0, 0.0));
    }

    #[test]
    fn constants_and_functions() {
        assert_abs_diff_eq!(eval_at("cos(pi)", &[]).re, -1.0);
        assert_abs_diff_eq!(eval_at("exp(log(2.5))", &[]).re, 2.5, epsilon = 1e-15);
        assert_eq!(eval_at("abs(3+4*i)", &[]), C64::new(5.0, 0.0));
        let z = eval_at("sqrt(-4)", &[]);
        assert_abs_diff_eq!(z.im, 2.0);
        assert_eq!(eval_at("1.5e2 + 2E-1", &[]), C64::new(150.2, 0.0));
    }

    #[test]
    fn parameters_are_resolved() {
        let e = parse_expr("1/(1-2*nu)", 1, &["nu"]).unwrap();
        let mut p = BTreeMap::new();
        p.insert("nu".to_string(), 0.3);
        assert_abs_diff_eq!(e.eval(&[0.0], &p).unwrap().re, 2.5, epsilon = 1e-15);
        assert!(e.eval(&[0.0], &BTreeMap::new()).is_err());
    }

    #[test]
    fn error_offsets() {
        let offset = |text: &str| match parse_expr(text, 1, &[]) {
            Err(Error::Parse { offset, .. }) => offset,
            other => panic!("expected parse error for {text:?}, got {other:?}"),
        };
        assert_eq!(offset("1 + foo"), 4);
        assert_eq!(offset("(1+2"), 0);
        assert_eq!(offset("1+2)"), 3);
        assert_eq!(offset("sin x1"), 0);
        assert_eq!(offset("sin(1,2)"), 5);
        assert_eq!(offset("bar(1)"), 0);
        assert_eq!(offset("2 $ 3"), 2);
        assert_eq!(offset(""), 0);
        assert_eq!(offset("1+"), 2);
    }

    #[test]
    fn print_round_trip() {
        for text in ["-x1^2+3*i", "sin(x1)/(2-x2)^0.5", "((1))", "-(-(2))", "2^-x1", "nu*x2-pi"] {
            let e = parse_expr(text, 2, &["nu"]).unwrap();
            let printed = e.to_string();
            let again = parse_expr(&printed, 2, &["nu"]).unwrap();
            assert_eq!(e, again, "{text} -> {printed}");
        }
    }

    #[test]
    fn constant_builder_evaluates_back() {
        let z = C64::new(-0.25, 1.5);
        let e = Expr::constant(z);
        assert_eq!(e.eval(&[], &BTreeMap::new()).unwrap(), z);
        let again = parse_expr(&e.to_string(), 0, &[]).unwrap();
        assert_eq!(again, e);
    }
}
