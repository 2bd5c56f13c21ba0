//! Exact rationals, p-adic valuations and reduction onto `F_p` and `P^1(F_p)`.
//!
//! Nothing here materializes `Q_p`. Every quantity is an exact rational and
//! the valuation is found by stripping factors of `p` from numerator and
//! denominator.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary precision fraction, always held in lowest terms with a positive
/// denominator.
pub type Rational = num_rational::BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"-3/7"`, `"+4"`, `"0"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::InvalidArgument(format!("`{s}` is not a rational number"));
    let t = s.trim();
    let (neg, body) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let digits = |d: &str| -> Result<BigInt> {
        if d.is_empty() || !d.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        BigInt::from_str(d).map_err(|_| bad())
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (digits(n)?, digits(d)?),
        None => (digits(body)?, BigInt::one()),
    };
    if den.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let num = if neg { -num } else { num };
    Ok(Rational::new(num, den))
}

/// An odd prime. `p = 2` is rejected: the coefficient formulas divide by 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        if p < 3 || p % 2 == 0 {
            return Err(Error::InvalidPrime(p));
        }
        let mut d = 3u64;
        while d.saturating_mul(d) <= p {
            if p % d == 0 {
                return Err(Error::InvalidPrime(p));
            }
            d += 2;
        }
        Ok(Prime(p))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    fn big(self) -> BigInt {
        BigInt::from(self.0)
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `v_p(x)`, with `+inf` for zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(i64),
    PlusInfinity,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::PlusInfinity => None,
        }
    }

    pub fn is_nonnegative(self) -> bool {
        match self {
            Valuation::Finite(v) => v >= 0,
            Valuation::PlusInfinity => true,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use Valuation::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.cmp(b),
            (Finite(_), PlusInfinity) => std::cmp::Ordering::Less,
            (PlusInfinity, Finite(_)) => std::cmp::Ordering::Greater,
            (PlusInfinity, PlusInfinity) => std::cmp::Ordering::Equal,
        }
    }
}

fn strip(mut n: BigInt, p: &BigInt) -> (i64, BigInt) {
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(p);
        if !r.is_zero() {
            return (v, n);
        }
        n = q;
        v += 1;
    }
}

pub fn vp(x: &Rational, p: Prime) -> Valuation {
    if x.is_zero() {
        return Valuation::PlusInfinity;
    }
    let pb = p.big();
    let (vn, _) = strip(x.numer().clone(), &pb);
    let (vd, _) = strip(x.denom().clone(), &pb);
    Valuation::Finite(vn - vd)
}

/// `|x|_p = p^{-v_p(x)}`, and `|0|_p = 0`.
pub fn pnorm(x: &Rational, p: Prime) -> Rational {
    match vp(x, p) {
        Valuation::PlusInfinity => Rational::zero(),
        Valuation::Finite(v) => {
            let pw = Rational::from_integer(num_traits::pow(p.big(), v.unsigned_abs() as usize));
            if v >= 0 {
                pw.recip()
            } else {
                pw
            }
        }
    }
}

fn residue_of(n: &BigInt, p: Prime) -> u64 {
    n.mod_floor(&p.big()).to_u64().expect("residue fits in u64")
}

/// Reduction `Z_(p) -> F_p`.
pub fn reduce_mod(x: &Rational, p: Prime) -> Result<FpElem> {
    if !vp(x, p).is_nonnegative() {
        return Err(Error::NegativeValuation(x.to_string()));
    }
    let num = FpElem::new(residue_of(x.numer(), p), p);
    let den = FpElem::new(residue_of(x.denom(), p), p);
    num.div(&den)
}

/// Projective reduction `Q -> P^1(F_p)`: negative valuation goes to infinity.
pub fn reduce_proj(x: &Rational, p: Prime) -> FpProj {
    match reduce_mod(x, p) {
        Ok(r) => FpProj::Finite(r),
        Err(_) => FpProj::Infinity,
    }
}

/// Element of `F_p`; carries its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FpElem {
    residue: u64,
    p: Prime,
}

impl FpElem {
    pub fn new(value: u64, p: Prime) -> Self {
        FpElem {
            residue: value % p.get(),
            p,
        }
    }

    pub fn from_i64(value: i64, p: Prime) -> Self {
        FpElem {
            residue: value.rem_euclid(p.get() as i64) as u64,
            p,
        }
    }

    pub fn zero(p: Prime) -> Self {
        Self::new(0, p)
    }

    pub fn one(p: Prime) -> Self {
        Self::new(1, p)
    }

    pub fn residue(self) -> u64 {
        self.residue
    }

    pub fn prime(self) -> Prime {
        self.p
    }

    pub fn is_zero(self) -> bool {
        self.residue == 0
    }

    fn check(self, other: FpElem) -> Result<u64> {
        if self.p != other.p {
            return Err(Error::ModulusMismatch(self.p.get(), other.p.get()));
        }
        Ok(self.p.get())
    }

    pub fn add(self, rhs: &FpElem) -> Result<FpElem> {
        let p = self.check(*rhs)?;
        Ok(FpElem::new(
            ((self.residue as u128 + rhs.residue as u128) % p as u128) as u64,
            self.p,
        ))
    }

    pub fn sub(self, rhs: &FpElem) -> Result<FpElem> {
        let p = self.check(*rhs)?;
        Ok(FpElem::new(
            ((self.residue as u128 + (p - rhs.residue) as u128) % p as u128) as u64,
            self.p,
        ))
    }

    pub fn mul(self, rhs: &FpElem) -> Result<FpElem> {
        let p = self.check(*rhs)?;
        Ok(FpElem::new(
            ((self.residue as u128 * rhs.residue as u128) % p as u128) as u64,
            self.p,
        ))
    }

    pub fn neg(self) -> FpElem {
        FpElem::new(self.p.get() - self.residue, self.p)
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inv(self) -> Result<FpElem> {
        if self.residue == 0 {
            return Err(Error::DivisionByZero);
        }
        let p = self.p.get() as i128;
        let (mut r0, mut r1) = (p, self.residue as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(FpElem::new(t0.rem_euclid(p) as u64, self.p))
    }

    pub fn div(self, rhs: &FpElem) -> Result<FpElem> {
        self.check(*rhs)?;
        self.mul(&rhs.inv()?)
    }

    /// Smallest nonnegative integer lift.
    pub fn lift(self) -> Rational {
        Rational::from_integer(BigInt::from(self.residue))
    }
}

pub fn fp_inv(u: FpElem) -> Result<FpElem> {
    u.inv()
}

impl fmt::Display for FpElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.residue)
    }
}

/// Point of the projective line `P^1(F_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FpProj {
    Finite(FpElem),
    Infinity,
}

impl FpProj {
    pub fn finite(self) -> Option<FpElem> {
        match self {
            FpProj::Finite(e) => Some(e),
            FpProj::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, FpProj::Infinity)
    }

    pub fn residue(self) -> Option<u64> {
        self.finite().map(FpElem::residue)
    }

    /// Parses a decimal residue or the token `inf`.
    pub fn parse(s: &str, p: Prime) -> Result<Self> {
        let t = s.trim();
        if t == "inf" {
            return Ok(FpProj::Infinity);
        }
        let r = parse_rational(t)?;
        reduce_mod(&r, p).map(FpProj::Finite)
    }
}

impl From<FpElem> for FpProj {
    fn from(e: FpElem) -> Self {
        FpProj::Finite(e)
    }
}

impl fmt::Display for FpProj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FpProj::Finite(e) => write!(f, "{e}"),
            FpProj::Infinity => f.write_str("inf"),
        }
    }
}

/// `p`-part-free numerator of a nonzero integer, used by callers that need
/// the unit `u` in `x = p^v u / w`.
pub fn unit_part(x: &Rational, p: Prime) -> Option<Rational> {
    if x.is_zero() {
        return None;
    }
    let pb = p.big();
    let (_, n) = strip(x.numer().clone(), &pb);
    let (_, d) = strip(x.denom().clone(), &pb);
    Some(Rational::new(n, d))
}
