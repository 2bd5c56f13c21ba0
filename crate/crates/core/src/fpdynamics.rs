//! dP-II evolved directly on `P^1(F_p)`.
//!
//! From a state `(u_{n-1}, u_n)` with both entries finite, one of seven
//! patterns determines the next `m` values (`m` in `{1, 3, 5, 7}`):
//!
//! | case | `u_n` | condition                            | emitted                          |
//! |------|-------|--------------------------------------|----------------------------------|
//! | 1    | any   | not `+-1`, or the singular term vanishes | one value                    |
//! | 2    | 1     | `beta_{n+2} != 0`                    | `inf, -1, X`                     |
//! | 3    | 1     | `beta_{n+2} = 0`, `a + delta != 0`   | `inf, -1, inf, 1, X`             |
//! | 4    | 1     | `beta_{n+2} = 0`, `a + delta = 0`    | `inf, -1, inf, 1, inf, -1, X`    |
//! | 5    | -1    | `alpha_{n+2} != 0`                   | `inf, 1, X`                      |
//! | 6    | -1    | `alpha_{n+2} = 0`, `a - delta != 0`  | `inf, 1, inf, -1, X`             |
//! | 7    | -1    | `alpha_{n+2} = 0`, `a - delta = 0`   | `inf, 1, inf, -1, inf, 1, X`     |
//!
//! Cases 2-4 require `alpha_n != 0` and 5-7 require `beta_n != 0`; otherwise
//! the state falls under case 1 with the vanishing term dropped.

use std::collections::HashMap;
use std::hash::Hash;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::maps::{Coefficients, DP2Params};
use crate::numbers::{FpElem, FpProj, Prime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FpState {
    pub u_prev: FpProj,
    pub u_cur: FpProj,
    /// Time index of `u_cur`.
    pub n: i64,
}

impl FpState {
    pub fn new(u_prev: FpProj, u_cur: FpProj, n: i64) -> Self {
        FpState { u_prev, u_cur, n }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternOutput {
    pub case: u8,
    /// `u_{n+1}, ..., u_{n+m}`.
    pub emitted: Vec<FpProj>,
    pub next_state: FpState,
}

fn undefined(u: FpElem, n: i64) -> Error {
    Error::UndefinedCase { u: u.residue(), n }
}

/// Division inside a case formula; a vanishing divisor is a dispatch bug.
fn quot(num: FpElem, den: FpElem, u: FpElem, n: i64) -> Result<FpElem> {
    if den.is_zero() {
        return Err(undefined(u, n));
    }
    num.div(&den)
}

pub fn dp2_fp_pattern(state: FpState, params: &DP2Params) -> Result<PatternOutput> {
    let (Some(t), Some(u)) = (state.u_prev.finite(), state.u_cur.finite()) else {
        return Err(Error::InfiniteInitial);
    };
    let p = params.prime();
    let n = state.n;
    let c = |v: i64| FpElem::from_i64(v, p);
    let (one, two, minus_one) = (c(1), c(2), c(-1));
    let a = params.a_mod();
    let d = params.delta_mod();
    let (al, be) = (params.alpha_mod(n), params.beta_mod(n));
    let alpha_zero = params.alpha(n).is_zero();
    let beta_zero = params.beta(n).is_zero();
    let fin = FpProj::Finite;
    let inf = FpProj::Infinity;

    let (case, emitted): (u8, Vec<FpProj>) = if u == one && !alpha_zero {
        if !params.beta(n + 2).is_zero() {
            let num = two
                .mul(&al)?
                .mul(&t)?
                .add(&two.mul(&d)?.mul(&params.beta_mod(n + 1))?)?
                .add(&two.sub(&d)?.mul(&a)?)?;
            let x = quot(num, two.mul(&params.beta_mod(n + 2))?, u, n)?;
            (2, vec![inf, fin(minus_one), fin(x)])
        } else if !a.add(&d)?.is_zero() {
            let num = a.mul(&d)?.sub(&a.sub(&d)?.mul(&t)?)?.neg();
            let x = quot(num, a.add(&d)?, u, n)?;
            (3, vec![inf, fin(minus_one), inf, fin(one), fin(x)])
        } else {
            let x = quot(one.add(&two.mul(&t)?)?, two, u, n)?;
            (4, vec![inf, fin(minus_one), inf, fin(one), inf, fin(minus_one), fin(x)])
        }
    } else if u == minus_one && !beta_zero {
        if !params.alpha(n + 2).is_zero() {
            let num = a
                .mul(&d.sub(&two)?)?
                .sub(&two.mul(&d)?.mul(&params.alpha_mod(n + 1))?)?
                .add(&two.mul(&be)?.mul(&t)?)?;
            let x = quot(num, two.mul(&params.alpha_mod(n + 2))?, u, n)?;
            (5, vec![inf, fin(one), fin(x)])
        } else if !a.sub(&d)?.is_zero() {
            let num = a.mul(&d)?.add(&a.add(&d)?.mul(&t)?)?;
            let x = quot(num, a.sub(&d)?, u, n)?;
            (6, vec![inf, fin(one), inf, fin(minus_one), fin(x)])
        } else {
            let x = quot(two.mul(&t)?.sub(&one)?, two, u, n)?;
            (7, vec![inf, fin(one), inf, fin(minus_one), inf, fin(one), fin(x)])
        }
    } else {
        // u = 1 with alpha_n = 0 or u = -1 with beta_n = 0 drops that term.
        let mut x = t.neg();
        if !(u == one && alpha_zero) {
            x = x.add(&quot(al, one.sub(&u)?, u, n)?)?;
        }
        if !(u == minus_one && beta_zero) {
            x = x.add(&quot(be, one.add(&u)?, u, n)?)?;
        }
        (1, vec![fin(x)])
    };
    let m = emitted.len();
    let u_prev = if m == 1 { state.u_cur } else { emitted[m - 2] };
    Ok(PatternOutput {
        case,
        next_state: FpState::new(u_prev, emitted[m - 1], n + m as i64),
        emitted,
    })
}

/// `count` values following `state`, chaining patterns.
pub fn dp2_fp_orbit_from(state: FpState, count: usize, params: &DP2Params) -> Result<Vec<FpProj>> {
    let mut out = Vec::with_capacity(count + 6);
    let mut s = state;
    while out.len() < count {
        let o = dp2_fp_pattern(s, params)?;
        out.extend(o.emitted);
        s = o.next_state;
    }
    out.truncate(count);
    Ok(out)
}

/// `u_1, ..., u_steps` from the seeds `u_0`, `u_1` (both finite).
pub fn dp2_fp_orbit(u0: FpProj, u1: FpProj, steps: usize, params: &DP2Params) -> Result<Vec<FpProj>> {
    if u0.is_infinite() || u1.is_infinite() {
        return Err(Error::InfiniteInitial);
    }
    if steps == 0 {
        return Ok(Vec::new());
    }
    let mut out = vec![u1];
    out.extend(dp2_fp_orbit_from(FpState::new(u0, u1, 1), steps - 1, params)?);
    Ok(out)
}

/// State at the first adjacent finite pair of a sequence `u_1, u_2, ...`.
pub fn first_finite_state(seq: &[FpProj]) -> Option<FpState> {
    seq.windows(2)
        .position(|w| !w[0].is_infinite() && !w[1].is_infinite())
        .map(|i| FpState::new(seq[i], seq[i + 1], i as i64 + 2))
}

/// Deterministic dynamics over a finite state space.
pub trait OrbitGenerator {
    type Key: Hash + Eq;
    fn key(&self) -> Self::Key;
    fn time(&self) -> i64;
    fn advance(&mut self) -> Result<()>;
}

/// dP-II orbit advanced one pattern at a time.
#[derive(Debug, Clone)]
pub struct Dp2Orbit<'a> {
    pub state: FpState,
    pub params: &'a DP2Params,
}

impl OrbitGenerator for Dp2Orbit<'_> {
    type Key = (FpProj, FpProj, i64);

    fn key(&self) -> Self::Key {
        let p = self.params.prime().get() as i64;
        (self.state.u_prev, self.state.u_cur, self.state.n.rem_euclid(p))
    }

    fn time(&self) -> i64 {
        self.state.n
    }

    fn advance(&mut self) -> Result<()> {
        self.state = dp2_fp_pattern(self.state, self.params)?.next_state;
        Ok(())
    }
}

/// Least `T > 0` at which the generator state recurs, searched within
/// `bound` advances.
pub fn detect_period<G: OrbitGenerator>(gen: &mut G, bound: usize) -> Result<i64> {
    let mut seen = HashMap::new();
    seen.insert(gen.key(), gen.time());
    for _ in 0..bound {
        gen.advance()
            .map_err(|e| Error::NoPeriodFound(e.to_string()))?;
        if let Some(t) = seen.insert(gen.key(), gen.time()) {
            return Ok(gen.time() - t);
        }
    }
    Err(Error::NoPeriodFound(format!("no recurrence within {bound} steps")))
}

/// State-space size `(p + 1)^2 p` bounding any recurrence search.
pub fn period_bound(p: Prime) -> usize {
    let q = p.get() as usize;
    (q + 1) * (q + 1) * q
}

pub fn dp2_period(state: FpState, params: &DP2Params) -> Result<i64> {
    let mut g = Dp2Orbit { state, params };
    detect_period(&mut g, period_bound(params.prime()))
}
