//! The dP-II map in system form, the family `Psi_gamma`, and the period-p
//! coefficient tables `alpha_n`, `beta_n`.
//!
//! The system form is
//!
//! ```text
//! x' = alpha_n / (1 - x) + beta_n / (1 + x) - y,    y' = x
//! ```
//!
//! and every step function is generic over the arithmetic carrier
//! ([`Field`]): exact rationals, `F_p` residues or `Q(e)`.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expr::CustomMap;
use crate::field::Field;
use crate::numbers::{rat, ratio, reduce_mod, vp, FpElem, Prime, Rational};

/// Source of the coefficients `alpha_n`, `beta_n` for the step function.
pub trait Coefficients {
    fn alpha(&self, n: i64) -> Rational;
    fn beta(&self, n: i64) -> Rational;
}

/// dP-II parameters with the period-`p` coefficient tables.
///
/// `alpha_{i + mp} = (i delta + z0 + a + n_alpha p) / 2` for `i` in `0..p`,
/// with `n_alpha` chosen so that one table entry is exactly zero (same for
/// `beta` with `(-i delta - z0 + a + n_beta p) / 2`). Every entry then has
/// `|.|_p` in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DP2Params {
    p: Prime,
    a: Rational,
    delta: Rational,
    z0: Rational,
    n_alpha: Rational,
    n_beta: Rational,
    alpha: Vec<Rational>,
    beta: Vec<Rational>,
    exact_zeros: bool,
}

/// Index `i` in `0..p` with `sign * (i delta + z0) + a == 0 (mod p)` and the
/// shift making that entry vanish exactly.
fn zero_slot(
    p: Prime,
    sign: i64,
    a: &Rational,
    delta: &Rational,
    z0: &Rational,
) -> Result<(u64, Rational)> {
    let d = reduce_mod(delta, p)?;
    if d.is_zero() {
        return Err(Error::NoExactZero);
    }
    // sign * i * delta == -(sign * z0 + a)
    let rhs = reduce_mod(&-(rat(sign) * z0 + a), p)?;
    let i = rhs.div(&FpElem::from_i64(sign, p).mul(&d)?)?.residue();
    let pr = rat(p.get() as i64);
    let shift = -(rat(sign) * (rat(i as i64) * delta + z0) + a) / pr;
    Ok((i, shift))
}

pub fn build_dp2_params(p: Prime, a: Rational, delta: Rational, z0: Rational) -> Result<DP2Params> {
    DP2Params::build(p, a, delta, z0, false)
}

impl DP2Params {
    /// With `fallback`, a `delta` vanishing mod `p` does not fail: the shifts
    /// are set to zero and the tables carry no exact zero
    /// (see [`DP2Params::has_exact_zeros`]).
    pub fn build(
        p: Prime,
        a: Rational,
        delta: Rational,
        z0: Rational,
        fallback: bool,
    ) -> Result<Self> {
        for (name, v) in [("a", &a), ("delta", &delta), ("z0", &z0)] {
            if !vp(v, p).is_nonnegative() {
                return Err(Error::NonIntegralParameter(name));
            }
        }
        let slots = zero_slot(p, 1, &a, &delta, &z0)
            .and_then(|sa| Ok((sa, zero_slot(p, -1, &a, &delta, &z0)?)));
        let (n_alpha, n_beta, exact_zeros) = match slots {
            Ok(((_, na), (_, nb))) => (na, nb, true),
            Err(Error::NoExactZero) if fallback => (Rational::zero(), Rational::zero(), false),
            Err(e) => return Err(e),
        };
        let pr = rat(p.get() as i64);
        let half = ratio(1, 2);
        let alpha = (0..p.get() as i64)
            .map(|i| (rat(i) * &delta + &z0 + &a + &n_alpha * &pr) * &half)
            .collect();
        let beta = (0..p.get() as i64)
            .map(|i| (-(rat(i) * &delta) - &z0 + &a + &n_beta * &pr) * &half)
            .collect();
        Ok(DP2Params {
            p,
            a,
            delta,
            z0,
            n_alpha,
            n_beta,
            alpha,
            beta,
            exact_zeros,
        })
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn delta(&self) -> &Rational {
        &self.delta
    }

    pub fn z0(&self) -> &Rational {
        &self.z0
    }

    pub fn n_alpha(&self) -> &Rational {
        &self.n_alpha
    }

    pub fn n_beta(&self) -> &Rational {
        &self.n_beta
    }

    pub fn alpha_table(&self) -> &[Rational] {
        &self.alpha
    }

    pub fn beta_table(&self) -> &[Rational] {
        &self.beta
    }

    /// False only for tables built in fallback mode.
    pub fn has_exact_zeros(&self) -> bool {
        self.exact_zeros
    }

    fn slot(&self, n: i64) -> usize {
        n.rem_euclid(self.p.get() as i64) as usize
    }

    /// `z_n = delta n + z0` (not periodic).
    pub fn z(&self, n: i64) -> Rational {
        rat(n) * &self.delta + &self.z0
    }

    pub fn alpha_mod(&self, n: i64) -> FpElem {
        reduce_mod(&self.alpha[self.slot(n)], self.p).expect("table entries are p-integral")
    }

    pub fn beta_mod(&self, n: i64) -> FpElem {
        reduce_mod(&self.beta[self.slot(n)], self.p).expect("table entries are p-integral")
    }

    pub fn a_mod(&self) -> FpElem {
        reduce_mod(&self.a, self.p).expect("checked at construction")
    }

    pub fn delta_mod(&self) -> FpElem {
        reduce_mod(&self.delta, self.p).expect("checked at construction")
    }
}

impl Coefficients for DP2Params {
    fn alpha(&self, n: i64) -> Rational {
        self.alpha[self.slot(n)].clone()
    }

    fn beta(&self, n: i64) -> Rational {
        self.beta[self.slot(n)].clone()
    }
}

/// Coefficients linear in `n` with slopes `+delta/2` and `-delta/2`, pinned
/// to given values at reference times.
///
/// [`LinearCoefficients::original`] is the unshifted equation with
/// `z_n = delta n + z0`. The confinement engine uses pinned variants that
/// agree with the period-p tables modulo `p` and vanish exactly where the
/// tables do, near the singular times of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCoefficients {
    half_delta: Rational,
    alpha_ref: (i64, Rational),
    beta_ref: (i64, Rational),
}

impl LinearCoefficients {
    pub fn original(params: &DP2Params) -> Self {
        let half = ratio(1, 2);
        LinearCoefficients {
            half_delta: &params.delta * &half,
            alpha_ref: (0, (&params.z0 + &params.a) * &half),
            beta_ref: (0, (&params.a - &params.z0) * &half),
        }
    }

    /// Agrees with the period-p table at `n0`.
    pub fn pinned_at(params: &DP2Params, n0: i64) -> Self {
        LinearCoefficients {
            half_delta: &params.delta * ratio(1, 2),
            alpha_ref: (n0, params.alpha(n0)),
            beta_ref: (n0, params.beta(n0)),
        }
    }

    pub fn with_alpha_zero_at(mut self, n: i64) -> Self {
        self.alpha_ref = (n, Rational::zero());
        self
    }

    pub fn with_beta_zero_at(mut self, n: i64) -> Self {
        self.beta_ref = (n, Rational::zero());
        self
    }
}

impl Coefficients for LinearCoefficients {
    fn alpha(&self, n: i64) -> Rational {
        &self.alpha_ref.1 + rat(n - self.alpha_ref.0) * &self.half_delta
    }

    fn beta(&self, n: i64) -> Rational {
        &self.beta_ref.1 - rat(n - self.beta_ref.0) * &self.half_delta
    }
}

/// One step of the system form at time `n`.
pub fn dp2_step<C: Field, K: Coefficients + ?Sized>(
    x: &C,
    y: &C,
    n: i64,
    coeffs: &K,
) -> Result<(C, C)> {
    let one = x.constant(&Rational::one())?;
    let alpha = x.constant(&coeffs.alpha(n))?;
    let beta = x.constant(&coeffs.beta(n))?;
    let left = alpha.over(&one.minus(x)?)?;
    let right = beta.over(&one.plus(x)?)?;
    Ok((left.plus(&right)?.minus(y)?, x.clone()))
}

/// `u_{n+1} + u_{n-1} - (z_n u_n + a) / (1 - u_n^2)` with the linear `z_n`;
/// zero iff the triple satisfies the scalar equation at `n`.
pub fn dp2_scalar_residual(
    u_prev: &Rational,
    u: &Rational,
    u_next: &Rational,
    n: i64,
    params: &DP2Params,
) -> Result<Rational> {
    let den = Rational::one() - u * u;
    if den.is_zero() {
        return Err(Error::DivisionByZero);
    }
    Ok(u_next + u_prev - (params.z(n) * u + &params.a) / den)
}

/// Parameters of `Psi_gamma: x' = (a x + 1) / (x^gamma y), y' = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QrtParams {
    p: Prime,
    gamma: u32,
    a: i64,
}

impl QrtParams {
    /// `a` must lie in `1..p` unless `allow_zero_a` permits `a = 0`.
    pub fn new(p: Prime, gamma: u32, a: i64, allow_zero_a: bool) -> Result<Self> {
        let ok = (1..p.get() as i64).contains(&a) || (allow_zero_a && a == 0);
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "QRT parameter a = {a} must lie in 1..{}",
                p.get() - 1
            )));
        }
        Ok(QrtParams { p, gamma, a })
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn gamma(&self) -> u32 {
        self.gamma
    }

    pub fn a(&self) -> i64 {
        self.a
    }
}

pub fn qrt_step<C: Field>(x: &C, y: &C, params: &QrtParams) -> Result<(C, C)> {
    let one = x.constant(&Rational::one())?;
    let a = x.constant(&rat(params.a))?;
    let num = a.times(x)?.plus(&one)?;
    let den = x.powi(params.gamma)?.times(y)?;
    Ok((num.over(&den)?, x.clone()))
}

/// A (possibly non-autonomous) plane map over any carrier.
pub trait PlaneMap {
    fn prime(&self) -> Prime;
    fn step<C: Field>(&self, x: &C, y: &C, n: i64) -> Result<(C, C)>;

    /// The step does not depend on `n`.
    fn autonomous(&self) -> bool {
        false
    }
}

impl PlaneMap for DP2Params {
    fn prime(&self) -> Prime {
        self.p
    }
    fn step<C: Field>(&self, x: &C, y: &C, n: i64) -> Result<(C, C)> {
        dp2_step(x, y, n, self)
    }
}

impl PlaneMap for QrtParams {
    fn prime(&self) -> Prime {
        self.p
    }
    fn step<C: Field>(&self, x: &C, y: &C, _n: i64) -> Result<(C, C)> {
        qrt_step(x, y, self)
    }
    fn autonomous(&self) -> bool {
        true
    }
}

/// dP-II driven by an explicit coefficient source.
#[derive(Debug, Clone)]
pub struct Dp2With<'a, K> {
    pub params: &'a DP2Params,
    pub coeffs: K,
}

impl<K: Coefficients> PlaneMap for Dp2With<'_, K> {
    fn prime(&self) -> Prime {
        self.params.p
    }
    fn step<C: Field>(&self, x: &C, y: &C, n: i64) -> Result<(C, C)> {
        dp2_step(x, y, n, &self.coeffs)
    }
}

#[derive(Debug, Clone)]
pub enum MapFamily {
    Dp2(DP2Params),
    Qrt(QrtParams),
    Custom(CustomMap),
}

impl MapFamily {
    pub fn prime(&self) -> Prime {
        match self {
            MapFamily::Dp2(m) => m.p,
            MapFamily::Qrt(m) => m.p,
            MapFamily::Custom(m) => m.prime(),
        }
    }
}

impl PlaneMap for MapFamily {
    fn prime(&self) -> Prime {
        MapFamily::prime(self)
    }
    fn step<C: Field>(&self, x: &C, y: &C, n: i64) -> Result<(C, C)> {
        match self {
            MapFamily::Dp2(m) => m.step(x, y, n),
            MapFamily::Qrt(m) => m.step(x, y, n),
            MapFamily::Custom(m) => m.step(x, y, n),
        }
    }
    fn autonomous(&self) -> bool {
        match self {
            MapFamily::Dp2(_) => false,
            MapFamily::Qrt(m) => m.autonomous(),
            MapFamily::Custom(m) => m.autonomous(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epsfield::EpsRational;
    use crate::numbers::reduce_proj;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn tau_params(q: u64) -> DP2Params {
        build_dp2_params(p(q), rat(-8), rat(2), rat(2)).unwrap()
    }

    /// Brute-force scan of integer shifts for an exact zero.
    fn scan_shift(q: i64, sign: i64, a: i64, delta: i64, z0: i64) -> Option<(i64, i64)> {
        for n in -50..=50 {
            for i in 0..q {
                if sign * (i * delta + z0) + a + n * q == 0 {
                    return Some((n, i));
                }
            }
        }
        None
    }

    #[test]
    fn tables_for_the_p5_example() {
        let prm = tau_params(5);
        assert_eq!(scan_shift(5, 1, -8, 2, 2), Some((0, 3)));
        assert_eq!(scan_shift(5, -1, -8, 2, 2), Some((2, 0)));
        assert_eq!(prm.n_alpha(), &rat(0));
        assert_eq!(prm.n_beta(), &rat(2));
        let a: Vec<_> = [-3, -2, -1, 0, 1].iter().map(|&v| rat(v)).collect();
        let b: Vec<_> = [0, -1, -2, -3, -4].iter().map(|&v| rat(v)).collect();
        assert_eq!(prm.alpha_table(), &a[..]);
        assert_eq!(prm.beta_table(), &b[..]);
    }

    #[test]
    fn shifts_match_brute_force_scan() {
        for q in [3i64, 5, 7, 11] {
            for a in -9..=9 {
                for delta in [1i64, 2, 4, -3] {
                    if delta.rem_euclid(q) == 0 {
                        continue;
                    }
                    for z0 in -3..=3 {
                        let prm =
                            build_dp2_params(p(q as u64), rat(a), rat(delta), rat(z0)).unwrap();
                        let (na, _) = scan_shift(q, 1, a, delta, z0).unwrap();
                        let (nb, _) = scan_shift(q, -1, a, delta, z0).unwrap();
                        assert_eq!(prm.n_alpha(), &rat(na));
                        assert_eq!(prm.n_beta(), &rat(nb));
                    }
                }
            }
        }
    }

    #[test]
    fn tables_reduce_to_the_unshifted_coefficients() {
        for q in [3u64, 5, 7] {
            let prm = tau_params(q);
            for n in -2 * q as i64..2 * q as i64 {
                let lin = LinearCoefficients::original(&prm);
                assert_eq!(reduce_mod(&prm.alpha(n), p(q)), reduce_mod(&lin.alpha(n), p(q)));
                assert_eq!(reduce_mod(&prm.beta(n), p(q)), reduce_mod(&lin.beta(n), p(q)));
                let sum = prm.alpha(n) + prm.beta(n);
                let expect =
                    prm.a() + (prm.n_alpha() + prm.n_beta()) * ratio(1, 2) * rat(q as i64);
                assert_eq!(sum, expect);
                assert_eq!(reduce_mod(&sum, p(q)), reduce_mod(prm.a(), p(q)));
                assert_eq!(
                    reduce_mod(&(prm.alpha(n) - prm.beta(n)), p(q)),
                    reduce_mod(&prm.z(n), p(q))
                );
            }
            let zeros = prm.alpha_table().iter().filter(|v| v.is_zero()).count();
            assert_eq!(zeros, 1);
            for v in prm.alpha_table().iter().chain(prm.beta_table()) {
                assert!(vp(v, p(q)).finite().is_none_or(|k| k == 0));
            }
        }
    }

    #[test]
    fn degenerate_delta() {
        let e = build_dp2_params(p(5), rat(1), rat(5), rat(0)).unwrap_err();
        assert_eq!(e.code(), "NO_EXACT_ZERO");
        let prm = DP2Params::build(p(5), rat(1), rat(5), rat(0), true).unwrap();
        assert!(!prm.has_exact_zeros());
        assert_eq!(
            build_dp2_params(p(5), ratio(1, 5), rat(1), rat(0)).unwrap_err().code(),
            "NON_INTEGRAL_PARAMETER"
        );
    }

    #[test]
    fn step_examples() {
        let prm = tau_params(5);
        let (x, y) = dp2_step(&rat(0), &rat(0), 3, &prm).unwrap();
        assert_eq!((x.clone(), y), (rat(-3), rat(0)));
        // scalar form cross-check with u_{n-1} = 0, u_n = 0: u_{n+1} = a_eff = alpha + beta
        assert_eq!(x, prm.alpha(3) + prm.beta(3));
        assert_eq!(
            dp2_step(&rat(1), &rat(7), 0, &prm).unwrap_err(),
            Error::DivisionByZero
        );
        let (x1, _) = dp2_step(
            &EpsRational::lift(rat(1)),
            &EpsRational::constant(rat(3)),
            4,
            &prm,
        )
        .unwrap();
        assert_eq!(x1.ord0(), Some(-1));
    }

    #[test]
    fn scalar_residual() {
        let prm = tau_params(5);
        let (up, u) = (ratio(1, 3), ratio(2, 7));
        let n = 4;
        let next = (prm.z(n) * &u + prm.a()) / (rat(1) - &u * &u) - &up;
        assert_eq!(dp2_scalar_residual(&up, &u, &next, n, &prm).unwrap(), rat(0));
        assert_eq!(
            dp2_scalar_residual(&rat(0), &rat(0), &rat(0), n, &prm).unwrap(),
            -prm.a()
        );
        assert!(dp2_scalar_residual(&rat(0), &rat(-1), &rat(0), n, &prm).is_err());
    }

    #[test]
    fn system_form_matches_scalar_form_on_original_coefficients() {
        let prm = tau_params(7);
        let lin = LinearCoefficients::original(&prm);
        let (mut x, mut y) = (ratio(1, 3), ratio(2, 5)); // (u_1, u_0)
        let mut seq = vec![y.clone(), x.clone()];
        for n in 1..8 {
            (x, y) = dp2_step(&x, &y, n, &lin).unwrap();
            seq.push(x.clone());
            assert_eq!(y, seq[n as usize]);
        }
        for n in 1..8usize {
            let r =
                dp2_scalar_residual(&seq[n - 1], &seq[n], &seq[n + 1], n as i64, &prm).unwrap();
            assert_eq!(r, rat(0));
        }
    }

    #[test]
    fn qrt_examples() {
        let q2 = QrtParams::new(p(5), 2, 1, false).unwrap();
        assert_eq!(qrt_step(&rat(1), &rat(1), &q2).unwrap(), (rat(2), rat(1)));
        let q0 = QrtParams::new(p(5), 0, 1, false).unwrap();
        assert_eq!(qrt_step(&rat(1), &rat(2), &q0).unwrap(), (rat(1), rat(1)));
        let (x, y) = qrt_step(&EpsRational::eps(), &EpsRational::constant(rat(1)), &q2).unwrap();
        assert_eq!(x.ord0(), Some(-2));
        assert_eq!(y, EpsRational::eps());
        assert!(qrt_step(&rat(0), &rat(1), &q2).is_err());
        assert!(QrtParams::new(p(5), 2, 0, false).is_err());
        assert!(QrtParams::new(p(5), 2, 0, true).is_ok());
        assert!(QrtParams::new(p(5), 2, 5, false).is_err());
    }

    #[test]
    fn good_reduction_on_a_fixed_state() {
        let prm = tau_params(5);
        let (x, y) = (ratio(1, 3), ratio(-4, 9));
        let (qx, qy) = dp2_step(&x, &y, 2, &prm).unwrap();
        let (fx, fy) = dp2_step(
            &reduce_mod(&x, p(5)).unwrap(),
            &reduce_mod(&y, p(5)).unwrap(),
            2,
            &prm,
        )
        .unwrap();
        assert_eq!(reduce_proj(&qx, p(5)).finite(), Some(fx));
        assert_eq!(reduce_proj(&qy, p(5)).finite(), Some(fy));
    }
}
