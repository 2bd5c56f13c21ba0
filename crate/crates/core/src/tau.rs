//! Generalized Laguerre polynomials, Casorati determinants and the rational
//! dP-II solution
//!
//! ```text
//! u_n = tau_{N+1}^{n+1} tau_N^{n-1} / (tau_{N+1}^n tau_N^n) - 1
//! ```
//!
//! with `a = -2(N+1)/lambda`, `delta = z0 = 2/lambda`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::maps::DP2Params;
use crate::numbers::{rat, reduce_proj, vp, FpElem, FpProj, Prime, Rational, Valuation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TauParams {
    n: u32,
    lambda: Rational,
}

impl TauParams {
    pub fn new(n: u32, lambda: Rational) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("N must be positive".into()));
        }
        if lambda.is_zero() {
            return Err(Error::InvalidArgument("lambda must be nonzero".into()));
        }
        Ok(TauParams { n, lambda })
    }

    pub fn big_n(&self) -> u32 {
        self.n
    }

    pub fn lambda(&self) -> &Rational {
        &self.lambda
    }

    pub fn a(&self) -> Rational {
        rat(-2 * (self.n as i64 + 1)) / &self.lambda
    }

    pub fn delta(&self) -> Rational {
        rat(2) / &self.lambda
    }

    pub fn z0(&self) -> Rational {
        self.delta()
    }

    /// Coefficient tables for reduction modulo `p`; requires `vp(lambda) = 0`.
    pub fn dp2_params(&self, p: Prime) -> Result<DP2Params> {
        self.check_unit(p)?;
        DP2Params::build(p, self.a(), self.delta(), self.z0(), false)
    }

    fn check_unit(&self, p: Prime) -> Result<()> {
        if vp(&self.lambda, p) != Valuation::Finite(0) {
            return Err(Error::InvalidArgument(format!(
                "lambda = {} is not a p-adic unit for p = {p}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Parameters carrying `a` and `z_n` of the unreduced equation, for
    /// residual checks over `Q` (built at the least odd prime coprime to
    /// `lambda`; the prime does not enter the residual).
    pub fn residual_params(&self) -> DP2Params {
        let mut q = 3;
        loop {
            if let Ok(p) = Prime::new(q) {
                if self.check_unit(p).is_ok() {
                    return DP2Params::build(p, self.a(), self.delta(), self.z0(), true)
                        .expect("p-integral parameters");
                }
            }
            q += 2;
        }
    }
}

/// `m (m-1) ... (m-j+1) / j!` for any integer `m`.
pub fn binomial(m: i64, j: i64) -> Rational {
    if j < 0 {
        return Rational::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..j {
        num *= BigInt::from(m - i);
        den *= BigInt::from(i + 1);
    }
    Rational::new(num, den)
}

/// `L_k^(nu)(lambda) = sum_{r=0}^{k} (-1)^r binom(k+nu, k-r) lambda^r / r!`,
/// zero for `k < 0`.
pub fn laguerre(k: i64, nu: i64, lambda: &Rational) -> Rational {
    let mut sum = Rational::zero();
    let mut term = Rational::one(); // (-lambda)^r / r!
    for r in 0..=k {
        sum += binomial(k + nu, k - r) * &term;
        term = -(term * lambda) / rat(r + 1);
    }
    sum
}

/// Entry `(i, j)` of the `N x N` matrix is `L_{N-2i+j}^(n)(lambda)`.
pub fn tau_matrix(big_n: u32, n: i64, lambda: &Rational) -> Vec<Vec<Rational>> {
    let nn = big_n as i64;
    (0..nn)
        .map(|i| (0..nn).map(|j| laguerre(nn - 2 * i + j, n, lambda)).collect())
        .collect()
}

/// Determinant by fraction-free (Bareiss) elimination over `Z` after
/// clearing row denominators.
pub fn det(m: &[Vec<Rational>]) -> Rational {
    let size = m.len();
    if size == 0 {
        return Rational::one();
    }
    let mut scale = BigInt::one();
    let mut a: Vec<Vec<BigInt>> = m
        .iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
            scale *= &l;
            row.iter().map(|c| c.numer() * (&l / c.denom())).collect()
        })
        .collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..size {
        if a[k][k].is_zero() {
            match (k + 1..size).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return Rational::zero(),
            }
        }
        for i in k + 1..size {
            for j in k + 1..size {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    Rational::new(sign * &a[size - 1][size - 1], scale)
}

/// `tau_N^n(lambda)`.
pub fn tau_det(big_n: u32, n: i64, lambda: &Rational) -> Rational {
    det(&tau_matrix(big_n, n, lambda))
}

/// Exact `u_n` of the rational solution.
pub fn rational_u(n: i64, params: &TauParams) -> Result<Rational> {
    let (nn, l) = (params.n, &params.lambda);
    let den = tau_det(nn + 1, n, l) * tau_det(nn, n, l);
    if den.is_zero() {
        return Err(Error::ZeroTauDenominator(n));
    }
    Ok(tau_det(nn + 1, n + 1, l) * tau_det(nn, n - 1, l) / den - Rational::one())
}

/// `reduce_proj(u_1), ..., reduce_proj(u_count)`.
pub fn reduced_solution(params: &TauParams, p: Prime, count: usize) -> Result<Vec<FpProj>> {
    params.check_unit(p)?;
    (1..=count as i64)
        .map(|n| Ok(reduce_proj(&rational_u(n, params)?, p)))
        .collect()
}

/// Non-degeneracy conditions of the reduced solution, superscripts taken
/// mod `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TauCond {
    /// `tau_{N+1}^{-N-1} tau_N^{-N-3} != 0`.
    pub first_holds: bool,
    /// `tau_{N+1}^{N+1} tau_N^{N-1} / (tau_{N+1}^N tau_N^N) != 2`.
    pub second_holds: bool,
    pub first_value: FpProj,
    pub second_value: FpProj,
}

pub fn taucond(params: &TauParams, p: Prime) -> Result<TauCond> {
    params.check_unit(p)?;
    let (nn, l) = (params.n, &params.lambda);
    let q = p.get() as i64;
    let m = |k: i64| k.rem_euclid(q);
    let ni = nn as i64;
    let first = tau_det(nn + 1, m(-ni - 1), l) * tau_det(nn, m(-ni - 3), l);
    let first_value = reduce_proj(&first, p);
    let num = tau_det(nn + 1, m(ni + 1), l) * tau_det(nn, m(ni - 1), l);
    let den = tau_det(nn + 1, m(ni), l) * tau_det(nn, m(ni), l);
    let second_value = if den.is_zero() {
        FpProj::Infinity
    } else {
        reduce_proj(&(num / den), p)
    };
    Ok(TauCond {
        first_holds: first_value != FpProj::Finite(FpElem::zero(p)),
        second_holds: second_value != FpProj::Finite(FpElem::from_i64(2, p)),
        first_value,
        second_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::dp2_scalar_residual;
    use crate::numbers::ratio;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn row(q: u64, vals: &[i64]) -> Vec<FpProj> {
        vals.iter()
            .map(|&v| if v < 0 { FpProj::Infinity } else { FpProj::Finite(FpElem::from_i64(v, p(q))) })
            .collect()
    }

    /// Cofactor expansion along the first row.
    fn cofactor_det(m: &[Vec<Rational>]) -> Rational {
        if m.is_empty() {
            return Rational::one();
        }
        let mut sum = Rational::zero();
        for j in 0..m.len() {
            let minor: Vec<Vec<Rational>> = m[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, v)| v.clone()).collect())
                .collect();
            let t = &m[0][j] * cofactor_det(&minor);
            if j % 2 == 0 {
                sum += t;
            } else {
                sum -= t;
            }
        }
        sum
    }

    #[test]
    fn laguerre_examples() {
        assert_eq!(laguerre(-1, 5, &rat(1)), rat(0));
        assert_eq!(laguerre(0, -4, &ratio(3, 7)), rat(1));
        assert_eq!(laguerre(2, 0, &rat(1)), ratio(-1, 2));
        assert_eq!(laguerre(3, 0, &rat(1)), ratio(-2, 3));
        assert_eq!(laguerre(1, 4, &rat(2)), rat(3));
    }

    #[test]
    fn laguerre_three_term_recurrence() {
        for nu in -6..6 {
            for l in [rat(1), rat(2), ratio(-1, 3)] {
                for k in 2..9 {
                    let lhs = rat(k) * laguerre(k, nu, &l);
                    let rhs = (rat(2 * k - 1 + nu) - &l) * laguerre(k - 1, nu, &l)
                        - rat(k - 1 + nu) * laguerre(k - 2, nu, &l);
                    assert_eq!(lhs, rhs, "k {k} nu {nu} lambda {l}");
                }
            }
        }
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau_det(1, 4, &rat(2)), rat(3));
        assert_eq!(tau_det(2, 0, &rat(1)), ratio(2, 3));
        let m = tau_matrix(3, 2, &rat(1));
        assert_eq!(m[2][0], rat(0));
    }

    #[test]
    fn bareiss_matches_cofactor_expansion() {
        for nn in 1..=5 {
            for n in -10..=10 {
                for l in [rat(1), rat(2), ratio(1, 2)] {
                    let m = tau_matrix(nn, n, &l);
                    assert_eq!(det(&m), cofactor_det(&m), "N {nn} n {n} lambda {l}");
                }
            }
        }
    }

    #[test]
    fn solution_satisfies_the_equation() {
        let t = TauParams::new(3, rat(1)).unwrap();
        let prm = t.residual_params();
        for n in -3..=3 {
            let u: Vec<_> = (n - 1..=n + 1).map(|k| rational_u(k, &t).unwrap()).collect();
            assert_eq!(dp2_scalar_residual(&u[0], &u[1], &u[2], n, &prm).unwrap(), rat(0));
        }
    }

    #[test]
    fn table_rows() {
        let t = TauParams::new(3, rat(1)).unwrap();
        let cases: [(u64, &[i64]); 4] = [
            (3, &[1, 2, -1, 1, 2, -1]),
            (5, &[4, 2, 3, 1, -1]),
            (7, &[1, -1, 6, 5, 1, -1, 6, 1, -1, 6, 5, 1, -1, 6]),
            (11, &[-1, 1, 6, 1, -1, 10, -1, 1, 0, 2, 10]),
        ];
        for (q, want) in cases {
            assert_eq!(reduced_solution(&t, p(q), want.len()).unwrap(), row(q, want), "p {q}");
        }
    }

    #[test]
    fn condition_diagnostics() {
        let t = TauParams::new(3, rat(1)).unwrap();
        for (q, d1, d2) in [(3, -1, -1), (5, -1, 4), (7, -1, 0), (11, 0, 7)] {
            let c = taucond(&t, p(q)).unwrap();
            let want = row(q, &[d1, d2]);
            assert_eq!((c.first_value, c.second_value), (want[0], want[1]), "p {q}");
            assert_eq!(c.first_holds, c.first_value != FpProj::Finite(FpElem::zero(p(q))));
        }
        assert!(!taucond(&t, p(11)).unwrap().first_holds);
    }

    #[test]
    fn shift_by_p_is_not_a_congruence() {
        let one = rat(1);
        let r = |nn, n, q| reduce_proj(&tau_det(nn, n, &one), p(q));
        assert_eq!((r(3, 0, 5), r(3, 5, 5)), (row(5, &[4])[0], row(5, &[0])[0]));
        assert_eq!((r(4, 0, 3), r(4, 3, 3)), (row(3, &[0])[0], FpProj::Infinity));
        for n in -15..=15 {
            assert_eq!(r(3, n, 7), r(3, n + 7, 7));
        }
    }

    #[test]
    fn reduction_requires_unit_lambda() {
        let t = TauParams::new(3, ratio(1, 3)).unwrap();
        assert!(reduced_solution(&t, p(3), 2).is_err());
        assert!(TauParams::new(0, rat(1)).is_err());
    }
}
