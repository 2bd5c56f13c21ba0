//! Almost-good-reduction engine.
//!
//! A reduced singular point is lifted to `(s + e, y0)` over `Q(e)` and
//! iterated until both coordinates have a finite reduction at `e = 0`. The
//! first such step is the confinement length `m`; the reduced pair at that
//! step is the image. Every confined run is cross-checked by substituting
//! `e := c p^k` for `c, k` in `1..=3` and iterating over `Q`.
//!
//! For dP-II the coefficients inside a run are linear in `n` (slopes
//! `+-delta/2`), agree with the period-p tables mod `p`, and vanish exactly
//! whenever the orbit revisits `+-1` at a time where the table vanishes.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use crate::epsfield::{EpsRational, DEFAULT_DEGREE_BOUND};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::maps::{Coefficients, DP2Params, Dp2With, LinearCoefficients, MapFamily, PlaneMap};
use crate::numbers::{
    rat, ratio, reduce_mod, reduce_proj, vp, FpElem, FpProj, Prime, Rational, Valuation,
};

pub const DEFAULT_MAX_STEPS: usize = 30;
pub const SCAN_PRIME_LIMIT: u64 = 101;
const MAX_REANCHORS: usize = 8;

/// Start of a run: `x = s + e`, `y = y0` (plus `e` when `shared_eps`).
#[derive(Debug, Clone, PartialEq)]
pub struct SingularLift {
    pub s: Rational,
    pub y0: Rational,
    pub n0: i64,
    pub shared_eps: bool,
}

impl SingularLift {
    pub fn new(s: Rational, y0: Rational, n0: i64) -> Self {
        SingularLift {
            s,
            y0,
            n0,
            shared_eps: false,
        }
    }

    pub fn shared(s: Rational, y0: Rational, n0: i64) -> Self {
        SingularLift {
            s,
            y0,
            n0,
            shared_eps: true,
        }
    }

    fn eps_state(&self) -> (EpsRational, EpsRational) {
        let x = EpsRational::lift(self.s.clone());
        let y = if self.shared_eps {
            EpsRational::lift(self.y0.clone())
        } else {
            EpsRational::constant(self.y0.clone())
        };
        (x, y)
    }

    fn rational_state(&self, e: &Rational) -> (Rational, Rational) {
        let y = if self.shared_eps {
            &self.y0 + e
        } else {
            self.y0.clone()
        };
        (&self.s + e, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConfinementStatus {
    Confined,
    NotConfined,
    DegreeOverflow,
    /// Confined over `Q(e)` but some exact-rational sample disagrees.
    Ambiguous,
}

impl ConfinementStatus {
    pub fn code(self) -> &'static str {
        match self {
            ConfinementStatus::Confined => "CONFINED",
            ConfinementStatus::NotConfined => "NOT_CONFINED",
            ConfinementStatus::DegreeOverflow => "DEGREE_OVERFLOW",
            ConfinementStatus::Ambiguous => "AGR_AMBIGUOUS",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfinementReport {
    pub status: ConfinementStatus,
    pub m: Option<usize>,
    pub image: Option<(FpProj, FpProj)>,
    /// `ord0` of `x` after each step; `None` is the zero function.
    pub pole_orders: Vec<Option<i64>>,
    /// Reduction of `x` after each step.
    pub trace: Vec<FpProj>,
    /// The degree bound was hit; with a diverging pole trace this is
    /// reported as `NotConfined`.
    pub degree_overflow: bool,
    /// `None` when sampling was skipped or the run did not confine.
    pub samples_agree: Option<bool>,
}

impl ConfinementReport {
    pub fn is_confined(&self) -> bool {
        self.status == ConfinementStatus::Confined
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfineOptions {
    pub max_steps: usize,
    pub degree_bound: usize,
    pub sample: bool,
}

impl Default for ConfineOptions {
    fn default() -> Self {
        ConfineOptions {
            max_steps: DEFAULT_MAX_STEPS,
            degree_bound: DEFAULT_DEGREE_BOUND,
            sample: true,
        }
    }
}

/// `Q(e)` carrier failing with `DegreeOverflow` once any intermediate
/// exceeds `cap`; stops runaway growth inside a single step.
#[derive(Debug, Clone, PartialEq)]
struct Capped {
    v: EpsRational,
    cap: usize,
}

impl Capped {
    fn wrap(&self, v: EpsRational) -> Result<Self> {
        v.check_degree(self.cap)?;
        Ok(Capped { v, cap: self.cap })
    }
}

impl Field for Capped {
    fn constant(&self, c: &Rational) -> Result<Self> {
        self.wrap(EpsRational::constant(c.clone()))
    }
    fn plus(&self, rhs: &Self) -> Result<Self> {
        self.wrap(self.v.add(&rhs.v))
    }
    fn minus(&self, rhs: &Self) -> Result<Self> {
        self.wrap(self.v.sub(&rhs.v))
    }
    fn times(&self, rhs: &Self) -> Result<Self> {
        self.wrap(self.v.mul(&rhs.v))
    }
    fn over(&self, rhs: &Self) -> Result<Self> {
        self.wrap(self.v.div(&rhs.v)?)
    }
    fn is_zero_elem(&self) -> bool {
        self.v.is_zero()
    }
}

enum RunEnd<G> {
    Report(ConfinementReport),
    Restart(G),
}

/// Negative pole orders strictly decreasing, at least two of them.
fn diverging(pole_orders: &[Option<i64>]) -> bool {
    let poles: Vec<i64> = pole_orders.iter().flatten().copied().filter(|&k| k < 0).collect();
    poles.len() >= 2 && poles.windows(2).all(|w| w[1] < w[0])
}

fn run_eps<M: PlaneMap, G>(
    map: &M,
    lift: &SingularLift,
    opts: &ConfineOptions,
    mut guard: impl FnMut(i64, &EpsRational) -> Option<G>,
) -> Result<RunEnd<G>> {
    if opts.max_steps == 0 {
        return Err(Error::InvalidArgument("max_steps must be at least 1".into()));
    }
    let p = map.prime();
    let (x0, y0) = lift.eps_state();
    let cap = 2 * opts.degree_bound;
    let (mut x, mut y) = (Capped { v: x0, cap }, Capped { v: y0, cap });
    let mut report = ConfinementReport {
        status: ConfinementStatus::NotConfined,
        m: None,
        image: None,
        pole_orders: Vec::new(),
        trace: Vec::new(),
        degree_overflow: false,
        samples_agree: None,
    };
    for j in 0..opts.max_steps {
        let t = lift.n0 + j as i64;
        if j > 0 {
            if let Some(g) = guard(t, &x.v) {
                return Ok(RunEnd::Restart(g));
            }
        }
        let stepped = map.step(&x, &y, t).and_then(|(nx, ny)| {
            nx.v.check_degree(opts.degree_bound)?;
            ny.v.check_degree(opts.degree_bound)?;
            Ok((nx, ny))
        });
        (x, y) = match stepped {
            Ok(s) => s,
            Err(Error::DegreeOverflow { .. }) => {
                report.degree_overflow = true;
                if !diverging(&report.pole_orders) {
                    report.status = ConfinementStatus::DegreeOverflow;
                }
                return Ok(RunEnd::Report(report));
            }
            Err(e) => return Err(e),
        };
        report.pole_orders.push(x.v.ord0());
        let rx = x.v.reduce_at_zero(p);
        report.trace.push(rx);
        let ry = y.v.reduce_at_zero(p);
        if !rx.is_infinite() && !ry.is_infinite() {
            report.status = ConfinementStatus::Confined;
            report.m = Some(j + 1);
            report.image = Some((rx, ry));
            return Ok(RunEnd::Report(report));
        }
    }
    Ok(RunEnd::Report(report))
}

/// Substitutes `e := c p^k` for `c, k` in `1..=3`, iterates `m` steps over
/// `Q` and compares the reductions with `image`.
pub fn sample_check<M: PlaneMap>(
    map: &M,
    lift: &SingularLift,
    m: usize,
    image: (FpProj, FpProj),
) -> bool {
    let p = map.prime();
    let pb = BigInt::from(p.get());
    for c in 1..=3i64 {
        for k in 1..=3u32 {
            let e = Rational::from_integer(BigInt::from(c) * num_traits::pow(pb.clone(), k as usize));
            let (mut x, mut y) = lift.rational_state(&e);
            for j in 0..m {
                match map.step(&x, &y, lift.n0 + j as i64) {
                    Ok(s) => (x, y) = s,
                    Err(_) => return false,
                }
            }
            if (reduce_proj(&x, p), reduce_proj(&y, p)) != image {
                return false;
            }
        }
    }
    true
}

fn finish<M: PlaneMap>(
    map: &M,
    lift: &SingularLift,
    opts: &ConfineOptions,
    mut report: ConfinementReport,
) -> ConfinementReport {
    if opts.sample && report.is_confined() {
        let ok = sample_check(map, lift, report.m.unwrap(), report.image.unwrap());
        report.samples_agree = Some(ok);
        if !ok {
            report.status = ConfinementStatus::Ambiguous;
        }
    }
    report
}

/// Runs any map from `lift` over `Q(e)`.
pub fn confine<M: PlaneMap>(
    map: &M,
    lift: &SingularLift,
    opts: &ConfineOptions,
) -> Result<ConfinementReport> {
    match run_eps(map, lift, opts, |_, _| None::<()>)? {
        RunEnd::Report(r) => Ok(finish(map, lift, opts, r)),
        RunEnd::Restart(()) => unreachable!("guard never restarts"),
    }
}

#[derive(Debug, Clone, Copy)]
enum Anchor {
    Alpha(i64),
    Beta(i64),
}

/// Linear coefficients agreeing with the tables mod `p` from `n0` on, with
/// exact zeros at the first vanishing time of each table within `window`.
pub fn run_coefficients(params: &DP2Params, n0: i64, window: usize) -> LinearCoefficients {
    let mut c = LinearCoefficients::pinned_at(params, n0);
    let times = n0..n0 + window as i64;
    if let Some(t) = times.clone().find(|&t| params.alpha_mod(t).is_zero()) {
        c = c.with_alpha_zero_at(t);
    }
    if let Some(t) = times.clone().find(|&t| params.beta_mod(t).is_zero()) {
        c = c.with_beta_zero_at(t);
    }
    c
}

/// dP-II run from `x = s + e`, `y = y0` at time `n0`, with `s` an exact
/// singular value `+1` or `-1`.
pub fn confine_dp2_state(
    params: &DP2Params,
    singular_value: i64,
    n0: i64,
    y0: &Rational,
    opts: &ConfineOptions,
) -> Result<(ConfinementReport, LinearCoefficients)> {
    if singular_value != 1 && singular_value != -1 {
        return Err(Error::InvalidArgument(format!(
            "singular value must be +1 or -1, got {singular_value}"
        )));
    }
    let p = params.prime();
    if !vp(y0, p).is_nonnegative() {
        return Err(Error::NegativeValuation(y0.to_string()));
    }
    let lift = SingularLift::new(rat(singular_value), y0.clone(), n0);
    let one = FpProj::Finite(FpElem::one(p));
    let minus_one = FpProj::Finite(FpElem::from_i64(-1, p));
    let mut coeffs = run_coefficients(params, n0, opts.max_steps);
    for _ in 0..=MAX_REANCHORS {
        let map = Dp2With {
            params,
            coeffs: coeffs.clone(),
        };
        let guard = |t: i64, x: &EpsRational| {
            let r = x.reduce_at_zero(p);
            let stale = |v: Rational| !v.is_zero() && reduce_mod(&v, p).is_ok_and(|e| e.is_zero());
            if r == one && stale(coeffs.alpha(t)) {
                Some(Anchor::Alpha(t))
            } else if r == minus_one && stale(coeffs.beta(t)) {
                Some(Anchor::Beta(t))
            } else {
                None
            }
        };
        match run_eps(&map, &lift, opts, guard)? {
            RunEnd::Report(r) => return Ok((finish(&map, &lift, opts, r), coeffs)),
            RunEnd::Restart(Anchor::Alpha(t)) => coeffs = coeffs.with_alpha_zero_at(t),
            RunEnd::Restart(Anchor::Beta(t)) => coeffs = coeffs.with_beta_zero_at(t),
        }
    }
    let map = Dp2With {
        params,
        coeffs: coeffs.clone(),
    };
    let r = match run_eps(&map, &lift, opts, |_, _| None::<()>)? {
        RunEnd::Report(r) => r,
        RunEnd::Restart(()) => unreachable!("guard never restarts"),
    };
    Ok((finish(&map, &lift, opts, r), coeffs))
}

/// [`confine_dp2_state`] with default options.
pub fn confine_dp2_case(
    params: &DP2Params,
    singular_value: i64,
    n: i64,
    y0: &Rational,
) -> Result<ConfinementReport> {
    Ok(confine_dp2_state(params, singular_value, n, y0, &ConfineOptions::default())?.0)
}

/// Representative of a residue in `-(p-1)/2..=(p-1)/2`.
pub fn symmetric_lift(r: FpElem) -> Rational {
    let p = r.prime().get() as i64;
    let v = r.residue() as i64;
    rat(if v > p / 2 { v - p } else { v })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub point: u64,
    pub y_residue: u64,
    pub n: i64,
    pub lift: SingularLift,
    pub report: ConfinementReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub records: Vec<ScanRecord>,
    /// Every report confined and every image a single closed form in `y`.
    pub has_agr: bool,
    pub closed_form_ok: bool,
}

fn is_singular<M: PlaneMap>(map: &M, x: FpElem, y: FpElem, n: i64) -> bool {
    map.step(&x, &y, n).is_err()
}

/// Leading coefficient in `e` of a nonzero element.
fn leading_coefficient(v: &EpsRational) -> Option<Rational> {
    let (n, d) = (v.num(), v.den());
    let (i, k) = (n.low_order()?, d.low_order()?);
    Some(&n.coeffs()[i] / &d.coeffs()[k])
}

/// Image coordinates at `x = s`, `y = y0 + e` whose leading coefficient is
/// a nonzero non-unit. Zero iff every factor of the map vanishing mod `p`
/// at `s` vanishes exactly.
fn lift_defect<M: PlaneMap>(map: &M, s: &Rational, y0: &Rational, n: i64) -> usize {
    let p = map.prime();
    let x = EpsRational::constant(s.clone());
    let y = EpsRational::lift(y0.clone());
    match map.step(&x, &y, n) {
        Ok((a, b)) => [a, b]
            .iter()
            .filter(|c| leading_coefficient(c).is_some_and(|l| vp(&l, p) != Valuation::Finite(0)))
            .count(),
        Err(_) => 0,
    }
}

/// Lift of `x` with the least defect: the preferred lift if its defect is
/// zero, else the first of least defect among `r/d` by height `max(|r|, d)`
/// up to `max(p, 12)`.
fn exact_lift<M: PlaneMap>(map: &M, x: FpElem, preferred: Rational, y0: &Rational, n: i64) -> Rational {
    let mut best = (lift_defect(map, &preferred, y0, n), preferred);
    if best.0 == 0 {
        return best.1;
    }
    let p = x.prime();
    let pi = p.get() as i64;
    for h in 1..=pi.max(12) {
        for d in 1..=h {
            if d % pi == 0 {
                continue;
            }
            let rs: Vec<i64> = if d == h { (-h..=h).collect() } else { vec![-h, h] };
            for r in rs {
                if r.gcd(&d) != 1 || reduce_mod(&ratio(r, d), p) != Ok(x) {
                    continue;
                }
                let c = ratio(r, d);
                let defect = lift_defect(map, &c, y0, n);
                if defect < best.0 {
                    best = (defect, c);
                    if best.0 == 0 {
                        return best.1;
                    }
                }
            }
        }
    }
    best.1
}

fn confine_scan_point<M: PlaneMap>(
    map: &M,
    x: FpElem,
    preferred: Rational,
    y0: Rational,
    n: i64,
    opts: &ConfineOptions,
) -> Result<(SingularLift, ConfinementReport)> {
    let s = exact_lift(map, x, preferred, &y0, n);
    let mut lift = SingularLift::new(s, y0, n);
    let (xe, ye) = lift.eps_state();
    if let Err(Error::DivisionByZero) = map.step(&xe, &ye, n) {
        lift.shared_eps = true;
    }
    let r = confine(map, &lift, opts)?;
    Ok((lift, r))
}

/// Scans every reduced state `(x, y)` at every `n` in `0..p` where the reduced
/// step is undefined.
pub fn agr_scan(map: &MapFamily, opts: &ConfineOptions) -> Result<ScanResult> {
    let p = map.prime();
    if p.get() > SCAN_PRIME_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "agr scan requires p <= {SCAN_PRIME_LIMIT}, got {p}"
        )));
    }
    let mut records: Vec<ScanRecord> = Vec::new();
    let mut first_at: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    for n in 0..p.get() as i64 {
        for xr in 0..p.get() {
            for yr in 0..p.get() {
                let (xe, ye) = (FpElem::new(xr, p), FpElem::new(yr, p));
                if !is_singular(map, xe, ye, n) {
                    continue;
                }
                let (s, y0) = (symmetric_lift(xe), symmetric_lift(ye));
                let (lift, report) = match map {
                    MapFamily::Dp2(params) => {
                        let sv = if xr == 1 { 1 } else { -1 };
                        let (r, _) = confine_dp2_state(params, sv, n, &y0, opts)?;
                        (SingularLift::new(rat(sv), y0, n), r)
                    }
                    _ if n > 0 && map.autonomous() => {
                        let base = &records[first_at[&(xr, yr)]];
                        let base: &ScanRecord = base;
                        let mut lift = base.lift.clone();
                        lift.n0 = n;
                        (lift, base.report.clone())
                    }
                    _ => {
                        first_at.insert((xr, yr), records.len());
                        confine_scan_point(map, xe, s, y0, n, opts)?
                    }
                };
                records.push(ScanRecord {
                    point: xr,
                    y_residue: yr,
                    n,
                    lift,
                    report,
                });
            }
        }
    }
    let closed_form_ok = closed_forms_hold(&records, p);
    let all_confined = records.iter().all(|r| r.report.is_confined());
    Ok(ScanResult {
        records,
        has_agr: all_confined && closed_form_ok,
        closed_form_ok,
    })
}

/// Per `(point, n)`, both image coordinates must fit one fractional-linear
/// formula in `y` over the single-direction lifts.
fn closed_forms_hold(records: &[ScanRecord], p: Prime) -> bool {
    let mut groups: BTreeMap<(u64, i64), Vec<(u64, FpProj, FpProj)>> = BTreeMap::new();
    for r in records {
        if r.lift.shared_eps {
            continue;
        }
        if let Some((ix, iy)) = r.report.image {
            groups
                .entry((r.point, r.n))
                .or_default()
                .push((r.y_residue, ix, iy));
        }
    }
    groups.values().all(|pts| {
        let xs: Vec<_> = pts.iter().map(|&(y, ix, _)| (y, ix)).collect();
        let ys: Vec<_> = pts.iter().map(|&(y, _, iy)| (y, iy)).collect();
        mobius_fits(&xs, p) && mobius_fits(&ys, p)
    })
}

/// True iff some nonzero `(A, B, C, D)` has `v (C y + D) = A y + B` at every
/// point, with `v = inf` meaning `C y + D = 0`.
pub fn mobius_fits(points: &[(u64, FpProj)], p: Prime) -> bool {
    let q = p.get();
    let rows: Vec<[u64; 4]> = points
        .iter()
        .map(|&(y, v)| match v {
            FpProj::Finite(v) => {
                let v = v.residue();
                [y % q, 1, (q - v * y % q) % q, (q - v) % q]
            }
            FpProj::Infinity => [0, 0, y % q, 1],
        })
        .collect();
    rank_mod(rows, q) < 4
}

fn rank_mod(mut rows: Vec<[u64; 4]>, q: u64) -> usize {
    let inv = |a: u64| FpElem::new(a, Prime::new(q).expect("prime")).inv().expect("nonzero").residue();
    let mut rank = 0;
    for col in 0..4 {
        let Some(piv) = (rank..rows.len()).find(|&i| rows[i][col] != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let f = inv(rows[rank][col]);
        for c in 0..4 {
            rows[rank][c] = rows[rank][c] * f % q;
        }
        for i in 0..rows.len() {
            if i != rank && rows[i][col] != 0 {
                let g = rows[i][col];
                for c in 0..4 {
                    rows[i][c] = (rows[i][c] + q * q - g * rows[rank][c] % q) % q;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpdynamics::{dp2_fp_pattern, FpState};
    use crate::maps::{build_dp2_params, QrtParams};
    use crate::numbers::ratio;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn fin(v: u64, q: u64) -> FpProj {
        FpProj::Finite(FpElem::new(v, p(q)))
    }

    fn qrt(q: u64, gamma: u32, a: i64) -> QrtParams {
        QrtParams::new(p(q), gamma, a, false).unwrap()
    }

    #[test]
    fn qrt_gamma2_simple_zero() {
        let r = confine(&qrt(5, 2, 1), &SingularLift::new(rat(0), rat(1), 0), &Default::default()).unwrap();
        assert_eq!(r.status, ConfinementStatus::Confined);
        assert_eq!(r.m, Some(3));
        assert_eq!(r.image, Some((fin(1, 5), fin(0, 5))));
        assert_eq!(r.samples_agree, Some(true));
        // 1/(a^2 y) with a = 2, y = 3 at p = 7 is 1/12 = 3
        let r = confine(&qrt(7, 2, 2), &SingularLift::new(rat(0), rat(3), 0), &Default::default()).unwrap();
        assert_eq!((r.m, r.image), (Some(3), Some((fin(3, 7), fin(0, 7)))));
    }

    #[test]
    fn qrt_gamma2_double_zero() {
        let r = confine(&qrt(5, 2, 1), &SingularLift::shared(rat(0), rat(0), 0), &Default::default()).unwrap();
        assert_eq!(r.status, ConfinementStatus::Confined);
        assert_eq!(r.m, Some(8));
        assert_eq!(r.image, Some((fin(0, 5), fin(0, 5))));
    }

    #[test]
    fn qrt_gamma3_diverges() {
        let r = confine(&qrt(5, 3, 1), &SingularLift::new(rat(0), rat(1), 0), &Default::default()).unwrap();
        assert_eq!(r.status, ConfinementStatus::NotConfined);
        assert!(diverging(&r.pole_orders), "{:?}", r.pole_orders);
    }

    #[test]
    fn dp2_case_examples() {
        let prm = build_dp2_params(p(5), rat(-8), rat(2), rat(2)).unwrap();
        let r = confine_dp2_case(&prm, 1, 4, &rat(3)).unwrap();
        assert_eq!(r.m, Some(3));
        assert_eq!(r.image, Some((fin(2, 5), fin(4, 5))));
        assert_eq!(r.trace[..2], [FpProj::Infinity, fin(4, 5)]);
        // alpha_3 = 0: x' = beta_3 / 2 - y0 = -3/2 - 1
        let r = confine_dp2_case(&prm, 1, 3, &rat(1)).unwrap();
        assert_eq!(r.m, Some(1));
        assert_eq!(r.image.unwrap().0, reduce_proj(&ratio(-5, 2), p(5)));

        // a = -delta mod 5, beta_4 = 0, alpha_2 != 0
        let prm = build_dp2_params(p(5), rat(3), rat(2), rat(0)).unwrap();
        let r = confine_dp2_case(&prm, 1, 2, &rat(2)).unwrap();
        assert_eq!(r.m, Some(7));
        assert_eq!(r.image, Some((reduce_proj(&ratio(5, 2), p(5)), fin(4, 5))));
        let one = fin(1, 5);
        let inf = FpProj::Infinity;
        assert_eq!(r.trace[..6], [inf, fin(4, 5), inf, one, inf, fin(4, 5)]);
    }

    #[test]
    fn dp2_runs_match_closed_forms() {
        for (q, a, d, z0) in [(3, -8, 2, 2), (5, 1, 2, 0), (5, 3, 2, 0), (7, 3, 4, 1), (3, 2, 1, 1), (3, 1, 2, 0)] {
            let prm = build_dp2_params(p(q), rat(a), rat(d), rat(z0)).unwrap();
            for s in [1, -1] {
                for n in 0..q as i64 {
                    for y in 0..q {
                        let t = FpElem::new(y, p(q));
                        let r = confine_dp2_case(&prm, s, n, &t.lift()).unwrap();
                        let st = FpState::new(FpProj::Finite(t), FpProj::Finite(FpElem::from_i64(s, p(q))), n);
                        let o = dp2_fp_pattern(st, &prm).unwrap();
                        let m = o.emitted.len();
                        let (ix, iy) = (o.next_state.u_cur, o.next_state.u_prev);
                        assert_eq!(r.trace[..m - 1], o.emitted[..m - 1]);
                        assert_eq!(r.status, ConfinementStatus::Confined, "{q} {a} {d} {z0} {s} {n} {y}");
                        assert_eq!((r.m, r.image), (Some(m), Some((ix, iy))), "{q} {a} {d} {z0} {s} {n} {y}");
                    }
                }
            }
        }
    }

    #[test]
    fn minimality_of_confined_runs() {
        let prm = build_dp2_params(p(7), rat(3), rat(4), rat(1)).unwrap();
        for n in 0..7 {
            let r = confine_dp2_case(&prm, -1, n, &rat(2)).unwrap();
            let m = r.m.unwrap();
            // y after step j is x after step j - 1, or the lift itself
            for j in 1..m {
                let y_inf = j >= 2 && r.trace[j - 2].is_infinite();
                assert!(r.trace[j - 1].is_infinite() || y_inf);
            }
        }
    }

    #[test]
    fn qrt_scans() {
        for gamma in 0..=2 {
            let s = agr_scan(&MapFamily::Qrt(qrt(5, gamma, 2)), &Default::default()).unwrap();
            assert!(s.has_agr, "gamma {gamma}");
        }
        let s = agr_scan(&MapFamily::Qrt(qrt(5, 3, 1)), &Default::default()).unwrap();
        assert!(s.records.iter().any(|r| r.report.status == ConfinementStatus::NotConfined));
        assert!(!s.has_agr);
    }

    #[test]
    fn custom_qrt_scans_match_builtin() {
        use crate::expr::{parse_map_expr, CustomMap, MapExpr};
        for (q, gamma, a) in [(7, 0, 6), (5, 2, 2), (5, 3, 2), (3, 4, 2)] {
            let ex = parse_map_expr(&format!("(a*x+1)/(x^{gamma}*y)")).unwrap();
            let bind = [("a".to_string(), rat(a))].into_iter().collect();
            let custom = CustomMap::new(p(q), ex, MapExpr::X, bind).unwrap();
            let c = agr_scan(&MapFamily::Custom(custom), &Default::default()).unwrap();
            let b = agr_scan(&MapFamily::Qrt(qrt(q, gamma, a)), &Default::default()).unwrap();
            let reports = |s: &ScanResult| s.records.iter().map(|r| (r.point, r.y_residue, r.n, r.report.clone())).collect::<Vec<_>>();
            assert_eq!(reports(&c), reports(&b), "p {q} gamma {gamma} a {a}");
        }
    }

    #[test]
    fn exact_root_is_preferred() {
        // a x + 1 = 0 mod 5 at x = 2; the exact root is -1/2
        let m = qrt(5, 2, 2);
        let x = FpElem::new(2, p(5));
        assert_eq!(lift_defect(&m, &rat(2), &rat(0), 0), 1);
        assert_eq!(exact_lift(&m, x, rat(2), &rat(0), 0), ratio(-1, 2));
        assert_eq!(exact_lift(&m, FpElem::new(0, p(5)), rat(0), &rat(1), 0), rat(0));
    }

    #[test]
    fn dp2_scan() {
        let prm = build_dp2_params(p(5), rat(-8), rat(2), rat(2)).unwrap();
        let s = agr_scan(&MapFamily::Dp2(prm), &Default::default()).unwrap();
        assert!(s.has_agr);
        assert_eq!(s.records.len(), 2 * 5 * 5);
        assert!(s.records.iter().all(|r| [1, 3, 5, 7].contains(&r.report.m.unwrap())));
    }

    #[test]
    fn mobius_fit() {
        let q = p(7);
        let pts: Vec<_> = (1..7).map(|y| (y, FpProj::Finite(FpElem::new(y, q).inv().unwrap()))).collect();
        assert!(mobius_fits(&pts, q));
        let bad: Vec<_> = (0..7).map(|y| (y, FpProj::Finite(FpElem::new(y * y, q)))).collect();
        assert!(!mobius_fits(&bad, q));
    }

    #[test]
    fn scan_guards_large_primes() {
        let e = agr_scan(&MapFamily::Qrt(qrt(103, 2, 1)), &Default::default()).unwrap_err();
        assert_eq!(e.code(), "INVALID_ARGUMENT");
    }
}
