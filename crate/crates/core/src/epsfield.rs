//! Rational functions in one formal parameter `e` over exact rationals.
//!
//! A singular point is lifted as `s + e`; iterating a map over `Q(e)` and then
//! letting `e -> 0` is the exact stand-in for the limit `|e p^k|_p -> 0`.
//!
//! Canonical form: numerator and denominator are coprime and the denominator
//! is monic. Two canonical values are equal iff they are structurally equal.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numbers::{reduce_proj, FpProj, Prime, Rational};

/// Default bound on numerator/denominator degree during a confinement run.
pub const DEFAULT_DEGREE_BOUND: usize = 64;

/// Polynomial in `e`; index `i` holds the coefficient of `e^i`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct EpsPoly {
    coeffs: Vec<Rational>,
}

impl EpsPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        EpsPoly { coeffs }
    }

    pub fn zero() -> Self {
        EpsPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        EpsPoly::new(vec![c])
    }

    /// `c * e^k`
    pub fn monomial(c: Rational, k: usize) -> Self {
        let mut v = vec![Rational::zero(); k + 1];
        v[k] = c;
        EpsPoly::new(v)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn lead(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    /// Index of the lowest nonzero coefficient.
    pub fn low_order(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn add(&self, rhs: &EpsPoly) -> EpsPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = Rational::zero();
        let v = (0..n)
            .map(|i| self.coeffs.get(i).unwrap_or(&zero) + rhs.coeffs.get(i).unwrap_or(&zero))
            .collect();
        EpsPoly::new(v)
    }

    pub fn neg(&self) -> EpsPoly {
        EpsPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn sub(&self, rhs: &EpsPoly) -> EpsPoly {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &EpsPoly) -> EpsPoly {
        if self.is_zero() || rhs.is_zero() {
            return EpsPoly::zero();
        }
        let mut v = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        EpsPoly::new(v)
    }

    pub fn scale(&self, c: &Rational) -> EpsPoly {
        EpsPoly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &EpsPoly) -> (EpsPoly, EpsPoly) {
        let lead = divisor.lead().expect("division by the zero polynomial");
        let mut rem = self.coeffs.clone();
        let dd = divisor.degree();
        if self.is_zero() || self.degree() < dd {
            return (EpsPoly::zero(), self.clone());
        }
        let mut quot = vec![Rational::zero(); self.degree() - dd + 1];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] / lead;
            if c.is_zero() {
                continue;
            }
            for (j, b) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= &c * b;
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (EpsPoly::new(quot), EpsPoly::new(rem))
    }

    /// Quotient of a division known to be exact.
    pub fn exact_div(&self, divisor: &EpsPoly) -> EpsPoly {
        if divisor.degree() == 0 {
            return self.scale(&divisor.lead().expect("nonzero divisor").recip());
        }
        self.div_rem(divisor).0
    }

    pub fn monic(&self) -> EpsPoly {
        match self.lead() {
            Some(l) => self.scale(&l.recip()),
            None => EpsPoly::zero(),
        }
    }

    /// Monic gcd, computed over `Z` by a modular algorithm.
    pub fn gcd(&self, rhs: &EpsPoly) -> EpsPoly {
        if self.is_zero() {
            return rhs.monic();
        }
        if rhs.is_zero() {
            return self.monic();
        }
        if self.degree() == 0 || rhs.degree() == 0 {
            return EpsPoly::constant(Rational::one());
        }
        let g = modular_gcd(&primitive_part(&self.coeffs), &primitive_part(&rhs.coeffs));
        EpsPoly::new(g.into_iter().map(Rational::from_integer).collect()).monic()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    /// Divides out `e^k`; the low `k` coefficients must be zero.
    fn shift_down(&self, k: usize) -> EpsPoly {
        EpsPoly::new(self.coeffs[k.min(self.coeffs.len())..].to_vec())
    }
}

impl fmt::Display for EpsPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            } else if c.is_negative() {
                f.write_str("-")?;
            }
            let a = c.abs();
            match i {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}*e")?,
                _ => write!(f, "{a}*e^{i}")?,
            }
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for EpsPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Integer coefficients with content 1 and positive leading coefficient.
fn primitive_part(coeffs: &[Rational]) -> Vec<BigInt> {
    let l = coeffs
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let v: Vec<BigInt> = coeffs.iter().map(|c| c.numer() * (&l / c.denom())).collect();
    normalize_int(v)
}

fn normalize_int(mut v: Vec<BigInt>) -> Vec<BigInt> {
    while v.last().is_some_and(Zero::is_zero) {
        v.pop();
    }
    let g = v.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
    if g.is_zero() {
        return v;
    }
    let sign = if v.last().unwrap().is_negative() { -g } else { g };
    v.iter().map(|c| c / &sign).collect()
}

fn mulmod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

fn powmod(mut a: u64, mut k: u64, q: u64) -> u64 {
    let mut r = 1;
    a %= q;
    while k > 0 {
        if k & 1 == 1 {
            r = mulmod(r, a, q);
        }
        a = mulmod(a, a, q);
        k >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit integers.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for b in BASES {
        if n % b == 0 {
            return n == b;
        }
    }
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'outer: for b in BASES {
        let mut x = powmod(b, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Primes below `2^62`, descending.
fn gcd_primes() -> impl Iterator<Item = u64> {
    ((1u64 << 61)..(1u64 << 62)).rev().step_by(2).filter(|&n| is_prime_u64(n))
}

fn reduce_vec(v: &[BigInt], q: u64) -> Vec<u64> {
    let qb = BigInt::from(q);
    v.iter()
        .map(|c| c.mod_floor(&qb).to_u64().expect("residue fits"))
        .collect()
}

fn trim_mod(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

/// Monic gcd over `F_q`.
fn gcd_mod(mut a: Vec<u64>, mut b: Vec<u64>, q: u64) -> Vec<u64> {
    trim_mod(&mut a);
    trim_mod(&mut b);
    while !b.is_empty() {
        let inv = powmod(*b.last().unwrap(), q - 2, q);
        let db = b.len() - 1;
        while a.len() > db {
            let k = a.len() - 1 - db;
            let c = mulmod(*a.last().unwrap(), inv, q);
            for (j, bj) in b.iter().enumerate() {
                a[k + j] = (a[k + j] + q - mulmod(c, *bj, q)) % q;
            }
            trim_mod(&mut a);
        }
        std::mem::swap(&mut a, &mut b);
    }
    let inv = powmod(*a.last().expect("nonzero gcd"), q - 2, q);
    a.iter().map(|&c| mulmod(c, inv, q)).collect()
}

fn divides(g: &[BigInt], a: &[BigInt]) -> bool {
    let to_poly = |v: &[BigInt]| EpsPoly::new(v.iter().cloned().map(Rational::from_integer).collect());
    a.len() >= g.len() && to_poly(a).div_rem(&to_poly(g)).1.is_zero()
}

/// Primitive gcd of primitive integer polynomials: images modulo large
/// primes scaled by `gcd(lc a, lc b)`, combined by CRT until stable and then
/// verified by exact division.
fn modular_gcd(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let gamma = a.last().unwrap().gcd(b.last().unwrap());
    let mut modulus = BigInt::one();
    let mut acc: Vec<BigInt> = Vec::new();
    let mut best = usize::MAX;
    for q in gcd_primes() {
        let qb = BigInt::from(q);
        if (a.last().unwrap() % &qb).is_zero() || (b.last().unwrap() % &qb).is_zero() {
            continue;
        }
        let g = gcd_mod(reduce_vec(a, q), reduce_vec(b, q), q);
        let deg = g.len() - 1;
        if deg == 0 {
            return vec![BigInt::one()];
        }
        if deg > best {
            continue;
        }
        let gm = gamma.mod_floor(&qb).to_u64().unwrap();
        let g: Vec<u64> = g.iter().map(|&c| mulmod(c, gm, q)).collect();
        if deg < best {
            best = deg;
            modulus = qb;
            acc = g.iter().map(|&c| BigInt::from(c)).collect();
            continue;
        }
        // CRT: x = acc (mod M), x = g (mod q)
        let minv = powmod(modulus.mod_floor(&qb).to_u64().unwrap(), q - 2, q);
        let next_mod = &modulus * &qb;
        let half = &next_mod >> 1;
        let mut stable = true;
        let mut next = Vec::with_capacity(acc.len());
        for (c, &r) in acc.iter().zip(&g) {
            let cq = c.mod_floor(&qb).to_u64().unwrap();
            let t = mulmod((r + q - cq) % q, minv, q);
            let mut x = (c + &modulus * BigInt::from(t)).mod_floor(&next_mod);
            if x > half {
                x -= &next_mod;
            }
            let half_old = &modulus >> 1;
            let mut old = c.mod_floor(&modulus);
            if old > half_old {
                old -= &modulus;
            }
            stable &= x == old;
            next.push(x);
        }
        acc = next;
        modulus = next_mod;
        if stable {
            let cand = normalize_int(acc.clone());
            if divides(&cand, a) && divides(&cand, b) {
                return cand;
            }
        }
    }
    unreachable!("prime supply exhausted")
}

/// Element of `Q(e)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EpsRational {
    num: EpsPoly,
    den: EpsPoly,
}

impl EpsRational {
    pub fn new(num: EpsPoly, den: EpsPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::canonical(num, den))
    }

    /// Normalizes an already coprime pair (monic denominator).
    fn from_coprime(num: EpsPoly, den: EpsPoly) -> Self {
        if num.is_zero() {
            return Self::constant(Rational::zero());
        }
        let l = den.lead().expect("nonzero denominator").recip();
        EpsRational {
            num: num.scale(&l),
            den: den.scale(&l),
        }
    }

    fn canonical(num: EpsPoly, den: EpsPoly) -> Self {
        if num.is_zero() {
            return EpsRational {
                num,
                den: EpsPoly::constant(Rational::one()),
            };
        }
        // Common powers of e come out cheaply before the full gcd.
        let k = num.low_order().unwrap().min(den.low_order().unwrap());
        let (num, den) = (num.shift_down(k), den.shift_down(k));
        let g = if num.degree() == 0 || den.degree() == 0 {
            EpsPoly::constant(Rational::one())
        } else {
            num.gcd(&den)
        };
        let (num, den) = if g.degree() > 0 {
            (num.div_rem(&g).0, den.div_rem(&g).0)
        } else {
            (num, den)
        };
        let l = den.lead().unwrap().recip();
        EpsRational {
            num: num.scale(&l),
            den: den.scale(&l),
        }
    }

    pub fn constant(c: Rational) -> Self {
        EpsRational {
            num: EpsPoly::constant(c),
            den: EpsPoly::constant(Rational::one()),
        }
    }

    /// The formal parameter `e` itself.
    pub fn eps() -> Self {
        EpsRational {
            num: EpsPoly::monomial(Rational::one(), 1),
            den: EpsPoly::constant(Rational::one()),
        }
    }

    /// `c + e`, the standard lift of a reduced coordinate.
    pub fn lift(c: Rational) -> Self {
        EpsRational {
            num: EpsPoly::new(vec![c, Rational::one()]),
            den: EpsPoly::constant(Rational::one()),
        }
    }

    pub fn num(&self) -> &EpsPoly {
        &self.num
    }

    pub fn den(&self) -> &EpsPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn degree(&self) -> usize {
        self.num.degree().max(self.den.degree())
    }

    pub fn check_degree(&self, bound: usize) -> Result<()> {
        let degree = self.degree();
        if degree > bound {
            return Err(Error::DegreeOverflow { degree, bound });
        }
        Ok(())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        if self.den == rhs.den {
            return Self::canonical(self.num.add(&rhs.num), self.den.clone());
        }
        let g = self.den.gcd(&rhs.den);
        if g.degree() == 0 {
            // Coprime denominators keep the sum reduced.
            return Self::from_coprime(
                self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den)),
                self.den.mul(&rhs.den),
            );
        }
        let b = self.den.exact_div(&g);
        let d = rhs.den.exact_div(&g);
        let num = self.num.mul(&d).add(&rhs.num.mul(&b));
        let h = num.gcd(&g);
        Self::from_coprime(num.exact_div(&h), b.mul(&rhs.den).exact_div(&h))
    }

    pub fn neg(&self) -> Self {
        EpsRational {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::constant(Rational::zero());
        }
        let g1 = self.num.gcd(&rhs.den);
        let g2 = rhs.num.gcd(&self.den);
        Self::from_coprime(
            self.num.exact_div(&g1).mul(&rhs.num.exact_div(&g2)),
            self.den.exact_div(&g2).mul(&rhs.den.exact_div(&g1)),
        )
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::from_coprime(self.den.clone(), self.num.clone()))
    }

    pub fn div(&self, rhs: &Self) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::canonical(self.num.mul(&rhs.den), self.den.mul(&rhs.num)))
    }

    /// Order of vanishing at `e = 0`; `None` stands for `+inf` (the zero
    /// function). Negative means a pole.
    pub fn ord0(&self) -> Option<i64> {
        let n = self.num.low_order()? as i64;
        let d = self.den.low_order().expect("nonzero denominator") as i64;
        Some(n - d)
    }

    /// Value at `e = 0`.
    pub fn eval0(&self) -> Result<Rational> {
        match self.ord0() {
            None => Ok(Rational::zero()),
            Some(k) if k < 0 => Err(Error::PoleAtZero),
            Some(k) if k > 0 => Ok(Rational::zero()),
            Some(_) => {
                let i = self.num.low_order().unwrap();
                let j = self.den.low_order().unwrap();
                Ok(&self.num.coeffs[i] / &self.den.coeffs[j])
            }
        }
    }

    /// Reduction of the `e -> 0` limit into `P^1(F_p)`: a pole goes to
    /// infinity, otherwise the limit is reduced projectively.
    pub fn reduce_at_zero(&self, p: Prime) -> FpProj {
        match self.eval0() {
            Ok(v) => reduce_proj(&v, p),
            Err(_) => FpProj::Infinity,
        }
    }

    /// Exact substitution `e := x`.
    pub fn eval_at(&self, x: &Rational) -> Result<Rational> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.num.eval(x) / d)
    }
}

impl From<Rational> for EpsRational {
    fn from(c: Rational) -> Self {
        EpsRational::constant(c)
    }
}

impl fmt::Display for EpsRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})/({})", self.num, self.den)
    }
}

impl fmt::Debug for EpsRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
