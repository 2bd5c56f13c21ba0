//! Expression language for user-supplied maps.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | atom ('^' NAT)?
//! atom   := NAT | NAT '/' NAT | 'x' | 'y' | 'n' | IDENT | '(' expr ')'
//! ```
//!
//! Identifiers other than `x`, `y`, `n` are parameters bound to rationals.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::maps::PlaneMap;
use crate::numbers::{vp, Prime, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapExpr {
    Num(Rational),
    X,
    Y,
    N,
    Param(String),
    Neg(Box<MapExpr>),
    Pow(Box<MapExpr>, u32),
    Bin(BinOp, Box<MapExpr>, Box<MapExpr>),
}

impl MapExpr {
    pub fn mentions_n(&self) -> bool {
        match self {
            MapExpr::N => true,
            MapExpr::Neg(e) | MapExpr::Pow(e, _) => e.mentions_n(),
            MapExpr::Bin(_, l, r) => l.mentions_n() || r.mentions_n(),
            _ => false,
        }
    }

    pub fn params(&self, out: &mut Vec<String>) {
        match self {
            MapExpr::Param(s) => {
                if !out.contains(s) {
                    out.push(s.clone());
                }
            }
            MapExpr::Neg(e) | MapExpr::Pow(e, _) => e.params(out),
            MapExpr::Bin(_, l, r) => {
                l.params(out);
                r.params(out);
            }
            _ => {}
        }
    }

    /// Evaluates over any carrier; `x` supplies the carrier for constants.
    pub fn eval<C: Field>(
        &self,
        x: &C,
        y: &C,
        n: i64,
        bindings: &BTreeMap<String, Rational>,
    ) -> Result<C> {
        match self {
            MapExpr::Num(c) => x.constant(c),
            MapExpr::X => Ok(x.clone()),
            MapExpr::Y => Ok(y.clone()),
            MapExpr::N => x.constant(&Rational::from_integer(BigInt::from(n))),
            MapExpr::Param(name) => match bindings.get(name) {
                Some(v) => x.constant(v),
                None => Err(Error::UnboundParameter(name.clone())),
            },
            MapExpr::Neg(e) => x.constant(&Rational::zero())?.minus(&e.eval(x, y, n, bindings)?),
            MapExpr::Pow(e, k) => e.eval(x, y, n, bindings)?.powi(*k),
            MapExpr::Bin(op, l, r) => {
                let a = l.eval(x, y, n, bindings)?;
                let b = r.eval(x, y, n, bindings)?;
                match op {
                    BinOp::Add => a.plus(&b),
                    BinOp::Sub => a.minus(&b),
                    BinOp::Mul => a.times(&b),
                    BinOp::Div => a.over(&b),
                }
            }
        }
    }
}

/// Fully parenthesized form; parses back to the same tree.
impl fmt::Display for MapExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapExpr::Num(c) if c.is_integer() => write!(f, "{c}"),
            MapExpr::Num(c) => write!(f, "({c})"),
            MapExpr::X => f.write_str("x"),
            MapExpr::Y => f.write_str("y"),
            MapExpr::N => f.write_str("n"),
            MapExpr::Param(s) => f.write_str(s),
            MapExpr::Neg(e) => write!(f, "(-{e})"),
            MapExpr::Pow(e, k) => write!(f, "({e}^{k})"),
            // An integer left of `/` would lex as a rational literal.
            MapExpr::Bin(BinOp::Div, l, r) if matches!(**l, MapExpr::Num(_)) => {
                write!(f, "(({l}) / {r})")
            }
            MapExpr::Bin(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Nat(BigInt),
    Ident(String),
    Sym(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let (mut line, mut column) = (1usize, 1usize);
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            column = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            column += 1;
            i += 1;
            continue;
        }
        let start = column;
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                i += 1;
                column += 1;
            }
            out.push(Token {
                tok: Tok::Nat(s.parse().expect("digits")),
                line,
                column: start,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
                column += 1;
            }
            out.push(Token {
                tok: Tok::Ident(s),
                line,
                column: start,
            });
        } else if "+-*/^()".contains(c) {
            out.push(Token {
                tok: Tok::Sym(c),
                line,
                column: start,
            });
            i += 1;
            column += 1;
        } else {
            return Err(Error::Parse {
                line,
                column,
                expected: "number, identifier, operator or parenthesis".into(),
            });
        }
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> Result<T> {
        let t = self.peek();
        Err(Error::Parse {
            line: t.line,
            column: t.column,
            expected: expected.into(),
        })
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn expr(&mut self) -> Result<MapExpr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.is_sym('+') {
                BinOp::Add
            } else if self.is_sym('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.term()?;
            lhs = MapExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<MapExpr> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.is_sym('*') {
                BinOp::Mul
            } else if self.is_sym('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = MapExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<MapExpr> {
        if self.is_sym('-') {
            self.bump();
            return Ok(MapExpr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.is_sym('^') {
            self.bump();
            match self.peek().tok.clone() {
                Tok::Nat(k) => {
                    let k: u32 = match u32::try_from(k) {
                        Ok(k) => k,
                        Err(_) => return self.fail("exponent below 2^32"),
                    };
                    self.bump();
                    return Ok(MapExpr::Pow(Box::new(base), k));
                }
                _ => return self.fail("nonnegative integer exponent"),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<MapExpr> {
        match self.peek().tok.clone() {
            Tok::Nat(a) => {
                self.bump();
                // NAT '/' NAT is a rational literal.
                if self.is_sym('/') {
                    if let Tok::Nat(b) = self.peek_at(1).clone() {
                        if b.is_zero() {
                            self.bump();
                            return self.fail("nonzero denominator");
                        }
                        self.bump();
                        self.bump();
                        return Ok(MapExpr::Num(Rational::new(a, b)));
                    }
                }
                Ok(MapExpr::Num(Rational::from_integer(a)))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(match s.as_str() {
                    "x" => MapExpr::X,
                    "y" => MapExpr::Y,
                    "n" => MapExpr::N,
                    _ => MapExpr::Param(s),
                })
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                if !self.is_sym(')') {
                    return self.fail("`)`, `+`, `-`, `*`, `/` or `^`");
                }
                self.bump();
                Ok(e)
            }
            _ => self.fail("number, `x`, `y`, `n`, identifier, `-` or `(`"),
        }
    }
}

pub fn parse_map_expr(source: &str) -> Result<MapExpr> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
    };
    let e = p.expr()?;
    if p.peek().tok != Tok::End {
        return p.fail("operator or end of input");
    }
    Ok(e)
}

/// A user map `(x, y) -> (expr_x, expr_y)` with bound parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomMap {
    p: Prime,
    expr_x: MapExpr,
    expr_y: MapExpr,
    bindings: BTreeMap<String, Rational>,
}

impl CustomMap {
    /// Every parameter must be bound to a p-integral rational.
    pub fn new(
        p: Prime,
        expr_x: MapExpr,
        expr_y: MapExpr,
        bindings: BTreeMap<String, Rational>,
    ) -> Result<Self> {
        let mut names = Vec::new();
        expr_x.params(&mut names);
        expr_y.params(&mut names);
        for name in names {
            match bindings.get(&name) {
                None => return Err(Error::UnboundParameter(name)),
                Some(v) if !vp(v, p).is_nonnegative() => {
                    return Err(Error::NegativeValuation(v.to_string()))
                }
                _ => {}
            }
        }
        Ok(CustomMap {
            p,
            expr_x,
            expr_y,
            bindings,
        })
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn exprs(&self) -> (&MapExpr, &MapExpr) {
        (&self.expr_x, &self.expr_y)
    }
}

impl PlaneMap for CustomMap {
    fn prime(&self) -> Prime {
        self.p
    }
    fn step<C: Field>(&self, x: &C, y: &C, n: i64) -> Result<(C, C)> {
        Ok((
            self.expr_x.eval(x, y, n, &self.bindings)?,
            self.expr_y.eval(x, y, n, &self.bindings)?,
        ))
    }
    fn autonomous(&self) -> bool {
        !self.expr_x.mentions_n() && !self.expr_y.mentions_n()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{qrt_step, QrtParams};
    use crate::numbers::{rat, ratio};
    use proptest::prelude::*;

    fn err_col(src: &str) -> usize {
        match parse_map_expr(src).unwrap_err() {
            Error::Parse { column, .. } => column,
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn qrt_expression_matches_builtin_map() {
        let ex = parse_map_expr("(a*x+1)/(x^2*y)").unwrap();
        let ey = parse_map_expr("x").unwrap();
        let p = Prime::new(5).unwrap();
        let bind = BTreeMap::from([("a".to_string(), rat(1))]);
        let m = CustomMap::new(p, ex, ey, bind).unwrap();
        let q = QrtParams::new(p, 2, 1, false).unwrap();
        for (x, y) in [(rat(1), rat(1)), (ratio(2, 3), ratio(-5, 7))] {
            assert_eq!(m.step(&x, &y, 0).unwrap(), qrt_step(&x, &y, &q).unwrap());
        }
    }

    #[test]
    fn parse_errors() {
        assert_eq!(err_col("x+"), 3);
        assert_eq!(err_col("x^y"), 3);
        assert_eq!(err_col("(x"), 3);
        assert_eq!(err_col("x $ y"), 3);
        assert_eq!(err_col("1/0"), 3);
        assert_eq!(parse_map_expr("x+").unwrap_err().code(), "PARSE_ERROR");
    }

    #[test]
    fn precedence() {
        let e = parse_map_expr("-x^2 + 3*y - n/2").unwrap();
        assert_eq!(e.to_string(), "(((-(x^2)) + (3 * y)) - (n / 2))");
        let e = parse_map_expr("1/2*x").unwrap();
        assert_eq!(e.to_string(), "((1/2) * x)");
        let e = parse_map_expr("x - y - 1").unwrap();
        assert_eq!(e.to_string(), "((x - y) - 1)");
    }

    #[test]
    fn unbound_parameters_are_rejected() {
        let p = Prime::new(5).unwrap();
        let e = parse_map_expr("b*x").unwrap();
        let err = CustomMap::new(p, e, MapExpr::X, BTreeMap::new()).unwrap_err();
        assert_eq!(err.code(), "UNBOUND_PARAMETER");
    }

    fn arb_expr() -> impl Strategy<Value = MapExpr> {
        let leaf = prop_oneof![
            (0i64..50).prop_map(|v| MapExpr::Num(rat(v))),
            (0i64..20, 1i64..20).prop_map(|(a, b)| MapExpr::Num(ratio(a, b))),
            Just(MapExpr::X),
            Just(MapExpr::Y),
            Just(MapExpr::N),
            "[a-m][a-z0-9_]{0,3}".prop_map(MapExpr::Param),
        ];
        leaf.prop_recursive(5, 40, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| MapExpr::Neg(Box::new(e))),
                (inner.clone(), 0u32..5).prop_map(|(e, k)| MapExpr::Pow(Box::new(e), k)),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div)
                    ],
                    inner.clone(),
                    inner
                )
                    .prop_map(|(op, l, r)| MapExpr::Bin(op, Box::new(l), Box::new(r))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            prop_assert_eq!(parse_map_expr(&printed).unwrap(), e);
        }
    }
}
