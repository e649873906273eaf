//! Expression language for user-defined targets.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'pi' | 'e' | x<k> | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus (`-x^2 = -(x^2)`) and is right
//! associative; the other binary operators associate left.

use std::fmt;

use crate::error::{Result, SmurfError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
            Self::Add => '+',
            Self::Sub => '-',
            Self::Mul => '*',
            Self::Div => '/',
            Self::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            Self::Add | Self::Sub => 1,
            Self::Mul | Self::Div => 2,
            Self::Pow => 4,
        }
    }
}

const NEG_PRECEDENCE: u8 = 3;
const ATOM_PRECEDENCE: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Tanh,
    Sqrt,
    Abs,
    Cas,
    Sigmoid,
}

impl Func {
    const ALL: [Func; 10] = [
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Tanh,
        Func::Sqrt,
        Func::Abs,
        Func::Cas,
        Func::Sigmoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Cas => "cas",
            Func::Sigmoid => "sigmoid",
        }
    }

    fn lookup(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Tanh => x.tanh(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
            Func::Cas => cas(x),
            Func::Sigmoid => sigmoid(x),
        }
    }
}

/// Hartley kernel `sin x + cos x`.
pub fn cas(x: f64) -> f64 {
    x.sin() + x.cos()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Abstract syntax tree. Variables are zero-based (`x1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(NamedConst),
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedConst {
    Pi,
    E,
}

impl NamedConst {
    fn value(self) -> f64 {
        match self {
            Self::Pi => std::f64::consts::PI,
            Self::E => std::f64::consts::E,
        }
    }
}

impl Expr {
    pub fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Const(c) => c.value(),
            Expr::Var(i) => vars[*i],
            Expr::Neg(e) => -e.eval(vars),
            Expr::Binary(op, l, r) => {
                let (a, b) = (l.eval(vars), r.eval(vars));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow(a, b),
                }
            }
            Expr::Call(f, e) => f.apply(e.eval(vars)),
        }
    }

    /// One more than the largest variable index used (0 for constants).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(e) | Expr::Call(_, e) => e.arity(),
            Expr::Binary(_, l, r) => l.arity().max(r.arity()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => NEG_PRECEDENCE,
            Expr::Neg(_) => NEG_PRECEDENCE,
            Expr::Binary(op, _, _) => op.precedence(),
            _ => ATOM_PRECEDENCE,
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if v.is_sign_negative() => write!(f, "(-{})", -v),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Const(NamedConst::Pi) => f.write_str("pi"),
            Expr::Const(NamedConst::E) => f.write_str("e"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_child(f, e, e.precedence() < NEG_PRECEDENCE)
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                let (left_parens, right_parens) = if *op == BinOp::Pow {
                    (l.precedence() <= p, r.precedence() < NEG_PRECEDENCE)
                } else {
                    (l.precedence() < p, r.precedence() <= p)
                };
                write_child(f, l, left_parens)?;
                if *op == BinOp::Pow {
                    write!(f, "{}", op.symbol())?;
                } else {
                    write!(f, " {} ", op.symbol())?;
                }
                write_child(f, r, right_parens)
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

/// Parses `text` into an expression tree.
pub fn parse_expression(text: &str) -> Result<Expr> {
    let mut parser = Parser {
        src: text,
        bytes: text.as_bytes(),
        pos: 0,
    };
    parser.skip_ws();
    if parser.pos == parser.bytes.len() {
        return Err(parser.error("empty expression"));
    }
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.bytes.len() {
        return Err(parser.error(format!(
            "unexpected `{}`",
            parser.src[parser.pos..].chars().next().unwrap()
        )));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> SmurfError {
        SmurfError::Parse {
            position: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.error(format!(
                "unexpected `{}`",
                self.src[self.pos..].chars().next().unwrap()
            ))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let b = self.bytes;
        let mut i = self.pos;
        while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
            i += 1;
        }
        if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                j += 1;
            }
            if j < b.len() && b[j].is_ascii_digit() {
                while j < b.len() && b[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = &self.src[start..i];
        let value: f64 = text.parse().map_err(|_| SmurfError::Parse {
            position: start,
            message: format!("malformed number `{text}`"),
        })?;
        self.pos = i;
        Ok(Expr::Num(value))
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        if self.peek() == Some(b'(') {
            let func = Func::lookup(name).ok_or_else(|| SmurfError::Parse {
                position: start,
                message: format!("unknown function `{name}`"),
            })?;
            self.pos += 1;
            let mut args = vec![self.expr()?];
            while self.eat(b',') {
                args.push(self.expr()?);
            }
            if !self.eat(b')') {
                return Err(self.error("expected `)` after arguments"));
            }
            if args.len() != 1 {
                return Err(SmurfError::Parse {
                    position: start,
                    message: format!("`{name}` takes 1 argument, got {}", args.len()),
                });
            }
            return Ok(Expr::Call(func, Box::new(args.pop().unwrap())));
        }
        match name {
            "pi" => return Ok(Expr::Const(NamedConst::Pi)),
            "e" => return Ok(Expr::Const(NamedConst::E)),
            _ => {}
        }
        if let Some(index) = name
            .strip_prefix('x')
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|&k| k >= 1 && !name[1..].starts_with('0'))
        {
            return Ok(Expr::Var(index - 1));
        }
        Err(SmurfError::Parse {
            position: start,
            message: format!("unknown identifier `{name}` (variables are x1, x2, ...)"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval(text: &str, vars: &[f64]) -> f64 {
        parse_expression(text).unwrap().eval(vars)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1 - 2 - 3", &[]), -4.0);
        assert_eq!(eval("8 / 4 / 2", &[]), 1.0);
        assert_eq!(eval("2 ^ 3 ^ 2", &[]), 512.0);
        assert_eq!(eval("-2^2", &[]), -4.0);
        assert_eq!(eval("(-2)^2", &[]), 4.0);
        assert_eq!(eval("2^-1", &[]), 0.5);
        assert_eq!(eval("1 + 2 * 3", &[]), 7.0);
        assert_eq!(eval("-x1 * 3", &[2.0]), -6.0);
        assert_eq!(eval("2e-1 + 1E1", &[]), 10.2);
    }

    #[test]
    fn identity_and_functions() {
        assert_eq!(eval("x1", &[0.37]), 0.37);
        assert!((eval("cas(pi / 4)", &[]) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(eval("sigmoid(0)", &[]), 0.5);
        assert_eq!(eval("abs(-3) + sqrt(4)", &[]), 5.0);
        assert_eq!(parse_expression("x3 * x1").unwrap().arity(), 3);
    }

    #[test]
    fn errors_report_position() {
        match parse_expression("x1 + * 2") {
            Err(SmurfError::Parse { position, .. }) => assert_eq!(position, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_expression("foo(x1)"),
            Err(SmurfError::Parse { .. })
        ));
        assert!(matches!(
            parse_expression("y"),
            Err(SmurfError::Parse { .. })
        ));
        assert!(matches!(
            parse_expression("x0"),
            Err(SmurfError::Parse { .. })
        ));
        assert!(matches!(
            parse_expression("sin(x1, x2)"),
            Err(SmurfError::Parse { .. })
        ));
        assert!(parse_expression("").is_err());
        assert!(parse_expression("(x1").is_err());
        assert!(parse_expression("x1)").is_err());
    }

    #[test]
    fn pretty_print() {
        let e = parse_expression("sin(x1)*cas(x2)").unwrap();
        assert_eq!(e.to_string(), "sin(x1) * cas(x2)");
        let e = parse_expression("(x1 - x2) - (x3 - 1)").unwrap();
        assert_eq!(e.to_string(), "x1 - x2 - (x3 - 1)");
        let e = parse_expression("(2^3)^2 - -x1").unwrap();
        assert_eq!(e.to_string(), "(2^3)^2 - -x1");
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|v| Expr::Num(v as f64 / 8.0)),
            (0usize..3).prop_map(Expr::Var),
            Just(Expr::Const(NamedConst::Pi)),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            let ops = prop_oneof![
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div),
                Just(BinOp::Pow),
            ];
            let funcs = proptest::sample::select(Func::ALL.to_vec());
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (funcs, inner.clone()).prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
                (ops, inner.clone(), inner).prop_map(|(op, l, r)| Expr::Binary(
                    op,
                    Box::new(l),
                    Box::new(r)
                )),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse_expression(&printed).unwrap();
            prop_assert_eq!(&reparsed, &e);
            prop_assert_eq!(reparsed.to_string(), printed);
        }
    }
}
