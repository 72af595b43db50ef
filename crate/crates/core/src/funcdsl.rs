//! A small arithmetic language for coefficient and forcing laws.
//!
//! Grammar (recursive descent):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `exp sin cos abs` (one argument), `min max pow` (two).
//! Any other identifier is a variable; binding is checked at evaluation time.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Abs,
    Min,
    Max,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// A parsed expression together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    source: String,
    tree: Expr,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Self> {
        let tree = Parser::new(source).parse_all()?;
        Ok(Expression {
            source: source.to_string(),
            tree,
        })
    }

    pub fn constant(value: f64) -> Self {
        Expression {
            source: format!("{value}"),
            tree: Expr::Num(value),
        }
    }

    pub fn tree(&self) -> &Expr {
        &self.tree
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Fully parenthesized text that reparses to the same tree.
    pub fn unparse(&self) -> String {
        unparse(&self.tree)
    }

    /// Sorted, deduplicated free variables.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        collect_vars(&self.tree, &mut out);
        out.sort();
        out.dedup();
        out
    }

    pub fn evaluate(&self, bindings: &HashMap<String, f64>) -> Result<f64> {
        eval_tree(&self.tree, &|name: &str| bindings.get(name).copied())
    }

    /// Resolve variables to slots so repeated evaluation avoids map lookups.
    pub fn compile(&self, slots: &[&str]) -> Result<Compiled> {
        let code = compile_tree(&self.tree, slots)?;
        Ok(Compiled { code })
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Serialize for Expression {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Expression::parse(&s).map_err(serde::de::Error::custom)
    }
}

pub fn unparse(e: &Expr) -> String {
    match e {
        Expr::Num(v) => format!("{v}"),
        Expr::Var(name) => name.clone(),
        Expr::Neg(a) => format!("(-{})", unparse(a)),
        Expr::Add(a, b) => format!("({} + {})", unparse(a), unparse(b)),
        Expr::Sub(a, b) => format!("({} - {})", unparse(a), unparse(b)),
        Expr::Mul(a, b) => format!("({} * {})", unparse(a), unparse(b)),
        Expr::Div(a, b) => format!("({} / {})", unparse(a), unparse(b)),
        Expr::Pow(a, b) => format!("({} ^ {})", unparse(a), unparse(b)),
        Expr::Call(f, args) => {
            let inner: Vec<String> = args.iter().map(unparse).collect();
            format!("{}({})", f.name(), inner.join(", "))
        }
    }
}

fn collect_vars(e: &Expr, out: &mut Vec<String>) {
    match e {
        Expr::Num(_) => {}
        Expr::Var(n) => out.push(n.clone()),
        Expr::Neg(a) => collect_vars(a, out),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
        Expr::Call(_, args) => args.iter().for_each(|a| collect_vars(a, out)),
    }
}

fn check(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("nonfinite result in {what}")))
    }
}

fn apply_div(a: f64, b: f64) -> Result<f64> {
    if b == 0.0 {
        return Err(Error::Domain("division by zero".into()));
    }
    check(a / b, "division")
}

fn apply_pow(base: f64, ex: f64) -> Result<f64> {
    if base < 0.0 && ex.fract() != 0.0 {
        return Err(Error::Domain(format!(
            "negative base {base} raised to non-integer exponent {ex}"
        )));
    }
    if base == 0.0 && ex < 0.0 {
        return Err(Error::Domain("zero raised to a negative exponent".into()));
    }
    check(base.powf(ex), "power")
}

fn apply_func(f: Func, args: &[f64]) -> Result<f64> {
    let v = match f {
        Func::Exp => args[0].exp(),
        Func::Sin => args[0].sin(),
        Func::Cos => args[0].cos(),
        Func::Abs => args[0].abs(),
        Func::Min => args[0].min(args[1]),
        Func::Max => args[0].max(args[1]),
        Func::Pow => return apply_pow(args[0], args[1]),
    };
    check(v, f.name())
}

fn eval_tree(e: &Expr, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64> {
    match e {
        Expr::Num(v) => Ok(*v),
        Expr::Var(n) => lookup(n).ok_or_else(|| Error::UnboundVariable(n.clone())),
        Expr::Neg(a) => Ok(-eval_tree(a, lookup)?),
        Expr::Add(a, b) => check(eval_tree(a, lookup)? + eval_tree(b, lookup)?, "addition"),
        Expr::Sub(a, b) => check(eval_tree(a, lookup)? - eval_tree(b, lookup)?, "subtraction"),
        Expr::Mul(a, b) => check(eval_tree(a, lookup)? * eval_tree(b, lookup)?, "multiplication"),
        Expr::Div(a, b) => apply_div(eval_tree(a, lookup)?, eval_tree(b, lookup)?),
        Expr::Pow(a, b) => apply_pow(eval_tree(a, lookup)?, eval_tree(b, lookup)?),
        Expr::Call(f, args) => {
            let vals = args
                .iter()
                .map(|a| eval_tree(a, lookup))
                .collect::<Result<Vec<_>>>()?;
            apply_func(*f, &vals)
        }
    }
}

/// Slot-resolved form of an [`Expression`].
#[derive(Debug, Clone)]
pub struct Compiled {
    code: CExpr,
}

#[derive(Debug, Clone)]
enum CExpr {
    Num(f64),
    Slot(usize),
    Neg(Box<CExpr>),
    Bin(BinOp, Box<CExpr>, Box<CExpr>),
    Call(Func, Vec<CExpr>),
}

#[derive(Debug, Clone, Copy)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

fn compile_tree(e: &Expr, slots: &[&str]) -> Result<CExpr> {
    let bin = |op, a: &Expr, b: &Expr| -> Result<CExpr> {
        Ok(CExpr::Bin(
            op,
            Box::new(compile_tree(a, slots)?),
            Box::new(compile_tree(b, slots)?),
        ))
    };
    Ok(match e {
        Expr::Num(v) => CExpr::Num(*v),
        Expr::Var(n) => CExpr::Slot(
            slots
                .iter()
                .position(|s| s == n)
                .ok_or_else(|| Error::UnboundVariable(n.clone()))?,
        ),
        Expr::Neg(a) => CExpr::Neg(Box::new(compile_tree(a, slots)?)),
        Expr::Add(a, b) => bin(BinOp::Add, a, b)?,
        Expr::Sub(a, b) => bin(BinOp::Sub, a, b)?,
        Expr::Mul(a, b) => bin(BinOp::Mul, a, b)?,
        Expr::Div(a, b) => bin(BinOp::Div, a, b)?,
        Expr::Pow(a, b) => bin(BinOp::Pow, a, b)?,
        Expr::Call(f, args) => CExpr::Call(
            *f,
            args.iter()
                .map(|a| compile_tree(a, slots))
                .collect::<Result<_>>()?,
        ),
    })
}

impl Compiled {
    /// Evaluate with `values[i]` bound to the i-th slot given to `compile`.
    pub fn eval(&self, values: &[f64]) -> Result<f64> {
        run(&self.code, values)
    }
}

fn run(c: &CExpr, v: &[f64]) -> Result<f64> {
    match c {
        CExpr::Num(x) => Ok(*x),
        CExpr::Slot(i) => Ok(v[*i]),
        CExpr::Neg(a) => Ok(-run(a, v)?),
        CExpr::Bin(op, a, b) => {
            let (x, y) = (run(a, v)?, run(b, v)?);
            match op {
                BinOp::Add => check(x + y, "addition"),
                BinOp::Sub => check(x - y, "subtraction"),
                BinOp::Mul => check(x * y, "multiplication"),
                BinOp::Div => apply_div(x, y),
                BinOp::Pow => apply_pow(x, y),
            }
        }
        CExpr::Call(f, args) => {
            let mut vals = [0.0; 2];
            for (slot, a) in vals.iter_mut().zip(args) {
                *slot = run(a, v)?;
            }
            apply_func(*f, &vals[..args.len()])
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            pos: 0,
            tok: Tok::End,
            tok_start: 0,
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            offset: self.tok_start,
            message: message.into(),
        })
    }

    fn advance(&mut self) -> Result<()> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos];
        if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
                self.pos += 1;
            }
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
                Ok(v) => self.tok = Tok::Num(v),
                Err(_) => return self.err(format!("malformed number `{text}`")),
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                self.pos += 1;
            }
            self.tok = Tok::Ident(self.src[start..self.pos].to_string());
        } else if b"+-*/^(),".contains(&c) {
            self.pos += 1;
            self.tok = Tok::Op(c as char);
        } else {
            let ch = self.src[self.pos..].chars().next().unwrap_or('?');
            return self.err(format!("unexpected character `{ch}`"));
        }
        Ok(())
    }

    fn parse_all(mut self) -> Result<Expr> {
        self.advance()?;
        let e = self.expr()?;
        if self.tok != Tok::End {
            return self.err("expected operator or end of input");
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Op('+') => {
                    self.advance()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Op('-') => {
                    self.advance()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.tok {
                Tok::Op('*') => {
                    self.advance()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op('/') => {
                    self.advance()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.tok == Tok::Op('-') {
            self.advance()?;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.tok == Tok::Op('^') {
            self.advance()?;
            let ex = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(ex)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                let start = self.tok_start;
                self.advance()?;
                if self.tok != Tok::Op('(') {
                    return Ok(Expr::Var(name));
                }
                let func = Func::from_name(&name).ok_or(Error::UnknownFunction {
                    name: name.clone(),
                    offset: start,
                })?;
                self.advance()?;
                let mut args = vec![self.expr()?];
                while self.tok == Tok::Op(',') {
                    self.advance()?;
                    args.push(self.expr()?);
                }
                if self.tok != Tok::Op(')') {
                    return self.err("expected `,` or `)`");
                }
                if args.len() != func.arity() {
                    return Err(Error::Syntax {
                        offset: start,
                        message: format!(
                            "`{}` takes {} argument(s), got {}",
                            func.name(),
                            func.arity(),
                            args.len()
                        ),
                    });
                }
                self.advance()?;
                Ok(Expr::Call(func, args))
            }
            Tok::Op('(') => {
                self.advance()?;
                let e = self.expr()?;
                if self.tok != Tok::Op(')') {
                    return self.err("expected `)`");
                }
                self.advance()?;
                Ok(e)
            }
            Tok::End => self.err("unexpected end of input, expected a number, variable or `(`"),
            Tok::Op(c) => self.err(format!("unexpected `{c}`, expected a number, variable or `(`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn num(v: f64) -> Box<Expr> {
        Box::new(Expr::Num(v))
    }
    fn var(n: &str) -> Box<Expr> {
        Box::new(Expr::Var(n.into()))
    }

    fn eval(src: &str, b: &[(&str, f64)]) -> Result<f64> {
        let map = b.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Expression::parse(src)?.evaluate(&map)
    }

    #[test]
    fn precedence() {
        let e = Expression::parse("x^2 + 1").unwrap();
        assert_eq!(e.tree(), &Expr::Add(Box::new(Expr::Pow(var("x"), num(2.0))), num(1.0)));
    }

    #[test]
    fn negative_exponent_with_call() {
        let e = Expression::parse("2^-abs(m-j)").unwrap();
        let expected = Expr::Pow(
            num(2.0),
            Box::new(Expr::Neg(Box::new(Expr::Call(
                Func::Abs,
                vec![Expr::Sub(var("m"), var("j"))],
            )))),
        );
        assert_eq!(e.tree(), &expected);
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(eval("2^3^2", &[]).unwrap(), 512.0);
        assert_eq!(eval("-2^2", &[]).unwrap(), -4.0);
        assert_eq!(eval("8/2/2", &[]).unwrap(), 2.0);
        assert_eq!(eval("8-2-2", &[]).unwrap(), 4.0);
    }

    #[test]
    fn incomplete_input_reports_offset() {
        match Expression::parse("x +") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Expression::parse("(x"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(Expression::parse("x $ 1"), Err(Error::Syntax { offset: 2, .. })));
    }

    #[test]
    fn unknown_function() {
        assert!(matches!(
            Expression::parse("1 + foo(x)"),
            Err(Error::UnknownFunction { offset: 4, .. })
        ));
        assert!(matches!(Expression::parse("min(1)"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(eval("x^2 + 1", &[("x", 2.0)]).unwrap(), 5.0);
        assert_eq!(eval("exp(0)", &[]).unwrap(), 1.0);
        assert_eq!(eval("2^-abs(m-j)", &[("m", 3.0), ("j", 1.0)]).unwrap(), 0.25);
        assert_eq!(eval("max(1, min(x, 3)) + pow(2, 3)", &[("x", 5.0)]).unwrap(), 11.0);
        assert_eq!(eval("1.5e-1 * 2E1", &[]).unwrap(), 3.0);
    }

    #[test]
    fn evaluation_errors() {
        assert!(matches!(eval("x + y", &[("x", 1.0)]), Err(Error::UnboundVariable(v)) if v == "y"));
        assert!(matches!(eval("1 / (x - 1)", &[("x", 1.0)]), Err(Error::Domain(_))));
        assert!(matches!(eval("(-2)^0.5", &[]), Err(Error::Domain(_))));
        assert!(matches!(eval("exp(1000)", &[]), Err(Error::Domain(_))));
        assert_eq!(eval("(-2)^3", &[]).unwrap(), -8.0);
    }

    #[test]
    fn compiled_matches_map_evaluation() {
        let e = Expression::parse("0.1*2^-abs(m-j) * sin(x) + y").unwrap();
        let c = e.compile(&["x", "y", "m", "j"]).unwrap();
        let got = c.eval(&[0.3, 0.2, 4.0, 2.0]).unwrap();
        let want = eval(e.source(), &[("x", 0.3), ("y", 0.2), ("m", 4.0), ("j", 2.0)]).unwrap();
        assert_eq!(got.to_bits(), want.to_bits());
        assert!(matches!(e.compile(&["x"]), Err(Error::UnboundVariable(_))));
    }

    #[test]
    fn grid_evaluation_is_reproducible() {
        let e = Expression::parse("exp(-x) * cos(3*y) + x^2/(1+y^2)").unwrap();
        let c = e.compile(&["x", "y"]).unwrap();
        let sweep = || -> Vec<u64> {
            (0..10_000)
                .map(|k| {
                    let x = (k % 100) as f64 / 99.0;
                    let y = (k / 100) as f64 / 99.0;
                    c.eval(&[x, y]).unwrap().to_bits()
                })
                .collect()
        };
        assert_eq!(sweep(), sweep());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|v| Expr::Num(v as f64 / 8.0)),
            prop_oneof![Just("x"), Just("y"), Just("m")].prop_map(|n| Expr::Var(n.to_string())),
        ];
        leaf.prop_recursive(4, 32, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Pow(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|a| Expr::Call(Func::Sin, vec![a])),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Call(Func::Max, vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn unparse_round_trip(tree in arb_expr(), x in -2.0f64..2.0, y in -2.0f64..2.0, m in 1.0f64..5.0) {
            let text = unparse(&tree);
            let once = Expression::parse(&text).unwrap();
            prop_assert_eq!(once.tree(), &tree);
            let twice = Expression::parse(&once.unparse()).unwrap();
            prop_assert_eq!(twice.tree(), once.tree());
            let b: HashMap<String, f64> =
                [("x".to_string(), x), ("y".to_string(), y), ("m".to_string(), m)].into();
            match (once.evaluate(&b), twice.evaluate(&b)) {
                (Ok(a), Ok(c)) => prop_assert_eq!(a.to_bits(), c.to_bits()),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "evaluation disagreed"),
            }
        }
    }
}
