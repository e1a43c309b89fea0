//! Hausdorff-dimension lower bounds and finite-depth Cantor levels.
//!
//! The closed forms are evaluated in exact rational arithmetic. The level
//! construction collects certified witness windows over blocks of primes
//! and nests them, measuring the gap and length constants on the way.

use rayon::prelude::*;
use rug::float::Round;
use rug::{Float, Integer, Rational};

use crate::alpha_solver::{check_exponent_cell, interval_j, EquationCoeffs};
use crate::bigfloat::CertifiedReal;
use crate::error::{Error, Result};
use crate::lifter::{make_witness, LiftConfig, SolvabilityWitness};
use crate::primes::primes_in;

fn frac(q: &Rational) -> Rational {
    let fl = q.clone().floor();
    Rational::from(q - &fl)
}

/// `(2 + {beta} - 2^(1 - floor(beta))) * (2 - {gamma})`.
fn exponent_denominator(beta: &Rational, gamma: &Rational) -> Rational {
    let d = beta.clone().floor();
    let d = d.numer().to_u32().expect("integer part checked to be small");
    // 2^(1-d) for d >= 1
    let pow = Rational::from((1, Integer::from(1) << (d - 1)));
    let left = Rational::from(2) + frac(beta) - pow;
    let right = Rational::from(2) - frac(gamma);
    left * right
}

fn check_cell_loose(beta: &Rational, gamma: &Rational) -> Result<()> {
    if beta == gamma {
        let fl = beta.clone().floor();
        if fl < 2 {
            return Err(Error::Domain("exponent must be at least 2".into()));
        }
        if fl > 64 {
            return Err(Error::Domain("exponent too large".into()));
        }
        return Ok(());
    }
    check_exponent_cell(beta, gamma)?;
    if beta.clone().floor() > 64 {
        return Err(Error::Domain("exponent too large".into()));
    }
    Ok(())
}

/// `r = gamma^2 / ((2 + {beta} - 2^(1-floor(beta))) (2 - {gamma})) + epsilon`.
///
/// `beta = gamma` is accepted so that `r(s, s, 0)` can be evaluated.
pub fn r_exponent(beta: &Rational, gamma: &Rational, epsilon: &Rational) -> Result<Rational> {
    check_cell_loose(beta, gamma)?;
    if *epsilon < 0 {
        return Err(Error::Domain("epsilon must be non-negative".into()));
    }
    let g2 = Rational::from(gamma * gamma);
    Ok(g2 / exponent_denominator(beta, gamma) + epsilon)
}

/// `q = (gamma + epsilon) (gamma^2 / (...) + 1 + epsilon)`.
pub fn q_exponent(beta: &Rational, gamma: &Rational, epsilon: &Rational) -> Result<Rational> {
    let r = r_exponent(beta, gamma, epsilon)?;
    Ok(Rational::from(gamma + epsilon) * (r + 1))
}

/// The lower bound `D(beta, gamma, epsilon)` assembled from the three cases.
pub fn dimension_bound(coeffs: &EquationCoeffs, beta: &Rational, gamma: &Rational, epsilon: &Rational) -> Result<Rational> {
    if coeffs.all_equal() {
        let r = r_exponent(beta, gamma, epsilon)?;
        let den = Rational::from(epsilon + 2u32) * Rational::from(gamma + epsilon) * (r + 1);
        Ok(Rational::from(2) / den)
    } else {
        Ok(Rational::from(2) / q_exponent(beta, gamma, epsilon)?)
    }
}

/// `(s + s^3 / ((2 + {s} - 2^(1-floor s)) (2 - {s})))^-1`, doubled unless `a = b = c`.
pub fn theorem1_bound(coeffs: &EquationCoeffs, s: &Rational) -> Result<Rational> {
    if *s <= 2 {
        return Err(Error::Domain("s must exceed 2".into()));
    }
    if s.clone().floor() > 64 {
        return Err(Error::Domain("s too large".into()));
    }
    let s3 = Rational::from(s * s) * s;
    let total = Rational::from(s + s3 / exponent_denominator(s, s));
    let base = total.recip();
    Ok(if coeffs.all_equal() { base } else { base * 2u32 })
}

/// Finite-prefix quotients `log(m_1 ... m_{k-1}) / -log(m_k delta_k)` for `k = 2..=len`.
#[derive(Clone, Debug, PartialEq)]
pub struct CantorBound {
    pub quotients: Vec<f64>,
    /// The quotient at the deepest level.
    pub estimate: f64,
}

pub fn cantor_lower_bound(m: &[u64], delta: &[f64]) -> Result<CantorBound> {
    if m.len() != delta.len() || m.len() < 2 {
        return Err(Error::Domain("need equally long m and delta lists of length >= 2".into()));
    }
    if let Some(k) = m.iter().position(|&v| v < 2) {
        return Err(Error::Domain(format!("m_{} = {} is below 2", k + 1, m[k])));
    }
    if delta.iter().any(|&d| !(d > 0.0)) || delta.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Domain("delta must be positive and strictly decreasing".into()));
    }
    let mut quotients = Vec::with_capacity(m.len() - 1);
    let mut log_prefix = 0.0;
    for k in 1..m.len() {
        log_prefix += (m[k - 1] as f64).ln();
        let denom = -((m[k] as f64).ln() + delta[k].ln());
        if !(denom > 0.0) {
            return Err(Error::Domain(format!("m_k * delta_k >= 1 at k = {}", k + 1)));
        }
        quotients.push(log_prefix / denom);
    }
    let estimate = *quotients.last().expect("at least one quotient");
    Ok(CantorBound { quotients, estimate })
}

/// Parameters that are used together in the closed-form bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionParams {
    pub s: Rational,
    pub coeffs: EquationCoeffs,
    pub beta: Rational,
    pub gamma: Rational,
    pub epsilon: Rational,
}

impl DimensionParams {
    /// Requires `s < beta < gamma` in one integer cell with `floor(s) >= 2` and `epsilon > 0`.
    pub fn new(s: Rational, coeffs: EquationCoeffs, beta: Rational, gamma: Rational, epsilon: Rational) -> Result<Self> {
        check_exponent_cell(&beta, &gamma)?;
        if !(s < beta) || s.clone().floor() != beta.clone().floor() {
            return Err(Error::Domain("s must lie below beta in the same integer cell".into()));
        }
        if epsilon <= 0 {
            return Err(Error::Domain("epsilon must be positive".into()));
        }
        Ok(Self {
            s,
            coeffs,
            beta,
            gamma,
            epsilon,
        })
    }

    pub fn theorem1(&self) -> Result<Rational> {
        theorem1_bound(&self.coeffs, &self.s)
    }

    pub fn finite_bound(&self) -> Result<Rational> {
        dimension_bound(&self.coeffs, &self.beta, &self.gamma, &self.epsilon)
    }
}

/// One basic interval `[lo, hi]` of a level.
#[derive(Clone, Debug, PartialEq)]
pub struct BasicInterval {
    pub lo: Float,
    pub hi: Float,
    /// `None` only for the seed interval.
    pub witness: Option<SolvabilityWitness>,
    /// Index of the enclosing interval in the previous level.
    pub parent: Option<usize>,
}

impl BasicInterval {
    fn from_witness(w: SolvabilityWitness) -> Self {
        Self {
            lo: w.window.lo().clone(),
            hi: w.window.hi().clone(),
            witness: Some(w),
            parent: None,
        }
    }

    /// Upper bound on the length.
    pub fn length(&self) -> Float {
        diff_up(&self.hi, &self.lo)
    }

    fn enclosure_length(&self) -> CertifiedReal {
        diff(&self.hi, &self.lo)
    }

    /// `self` lies strictly inside `outer`.
    pub fn inside(&self, outer: &BasicInterval) -> bool {
        self.lo > outer.lo && self.hi < outer.hi
    }
}

fn prec_of(a: &Float, b: &Float) -> u32 {
    a.prec().max(b.prec()) + 8
}

fn diff_up(a: &Float, b: &Float) -> Float {
    Float::with_val_round(prec_of(a, b), a - b, Round::Up).0
}

fn diff(a: &Float, b: &Float) -> CertifiedReal {
    let p = prec_of(a, b);
    let lo = Float::with_val_round(p, a - b, Round::Down).0;
    let hi = Float::with_val_round(p, a - b, Round::Up).0;
    CertifiedReal::new(lo, hi).expect("directed rounding keeps lo <= hi")
}

fn min_by_lo(items: impl IntoIterator<Item = CertifiedReal>) -> Option<CertifiedReal> {
    items.into_iter().reduce(|a, b| if b.lo() < a.lo() { b } else { a })
}

/// Measured counterparts of the existential constants.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LevelStats {
    /// `min over x of x * (smallest gap inside G_x)`.
    pub b1: Option<f64>,
    /// `U^2 * min_gap`.
    pub b2: Option<f64>,
    /// `U^q * min_len`.
    pub b3: Option<f64>,
    /// `max over parents I of U diam(I) / (children(I) log U)`.
    pub b4: Option<f64>,
}

/// Windows of `G_x`, one per admissible `z` whose witness could be built.
#[derive(Clone, Debug)]
pub struct GxWindows {
    pub x: u64,
    pub witnesses: Vec<SolvabilityWitness>,
    /// `(z, reason)` for every admissible `z` without a witness.
    pub failures: Vec<(u64, String)>,
}

impl GxWindows {
    /// Smallest certified gap between consecutive windows.
    pub fn min_gap(&self) -> Option<CertifiedReal> {
        let mut w: Vec<&SolvabilityWitness> = self.witnesses.iter().collect();
        w.sort_by(|a, b| a.window.lo().partial_cmp(b.window.lo()).expect("finite bounds"));
        min_by_lo(w.windows(2).map(|p| diff(p[1].window.lo(), p[0].window.hi())))
    }
}

pub fn build_g_x(cfg: &LiftConfig, coeffs: &EquationCoeffs, x: u64, beta: &Rational, gamma: &Rational) -> Result<GxWindows> {
    let j = interval_j(&cfg.cert, coeffs, x, beta, gamma)?;
    let mut witnesses = Vec::new();
    let mut failures: Vec<(u64, String)> = j.excluded.iter().map(|&z| (z, "membership in J undecided".to_string())).collect();
    for z in j.zs {
        match make_witness(cfg, coeffs, x, z, beta, gamma) {
            Ok(w) => witnesses.push(w),
            Err(e) => failures.push((z, e.to_string())),
        }
    }
    witnesses.sort_by(|a, b| a.window.lo().partial_cmp(b.window.lo()).expect("finite bounds"));
    Ok(GxWindows { x, witnesses, failures })
}

/// A level of the nested construction.
#[derive(Clone, Debug)]
pub struct CantorLevel {
    pub depth: u32,
    /// Prime-block parameter; `None` for the seed.
    pub u: Option<u64>,
    pub intervals: Vec<BasicInterval>,
    /// `None` when the level holds a single interval.
    pub min_gap: Option<CertifiedReal>,
    pub min_len: CertifiedReal,
    pub stats: LevelStats,
    /// `(x, z, reason)` for admissible pairs without a window.
    pub failures: Vec<(u64, u64, String)>,
    /// Windows dropped because they overlapped an earlier one.
    pub dropped_overlaps: usize,
}

impl CantorLevel {
    /// The seed `(beta, 2 gamma)`, with endpoints rounded inward.
    pub fn seed(beta: &Rational, gamma: &Rational, precision_bits: u32) -> Self {
        let lo = Float::with_val_round(precision_bits, beta, Round::Up).0;
        let hi = Float::with_val_round(precision_bits, Rational::from(gamma * 2u32), Round::Down).0;
        let iv = BasicInterval {
            lo,
            hi,
            witness: None,
            parent: None,
        };
        Self {
            depth: 1,
            u: None,
            min_gap: None,
            min_len: iv.enclosure_length(),
            intervals: vec![iv],
            stats: LevelStats::default(),
            failures: Vec::new(),
            dropped_overlaps: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Sorted, pairwise disjoint with certified positive gaps.
    pub fn is_disjoint(&self) -> bool {
        self.intervals.windows(2).all(|p| diff(&p[1].lo, &p[0].hi).sign() == Some(std::cmp::Ordering::Greater))
    }

    /// Number of intervals whose parent is `i`.
    pub fn children_of(&self, i: usize) -> usize {
        self.intervals.iter().filter(|c| c.parent == Some(i)).count()
    }

    fn measure(&mut self) {
        self.min_gap = min_by_lo(self.intervals.windows(2).map(|p| diff(&p[1].lo, &p[0].hi)));
        self.min_len = min_by_lo(self.intervals.iter().map(BasicInterval::enclosure_length)).expect("non-empty level");
    }
}

/// Sorts windows, drops any that overlap an earlier one, and measures gaps.
fn assemble(depth: u32, u: u64, mut intervals: Vec<BasicInterval>, failures: Vec<(u64, u64, String)>) -> Result<CantorLevel> {
    intervals.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("finite bounds"));
    let total = intervals.len();
    let mut kept: Vec<BasicInterval> = Vec::with_capacity(total);
    for iv in intervals {
        let clear = kept
            .last()
            .map_or(true, |prev| diff(&iv.lo, &prev.hi).sign() == Some(std::cmp::Ordering::Greater));
        if clear {
            kept.push(iv);
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyLevel(format!("no window for primes in ({u}, {}]", 2 * u)));
    }
    let dropped_overlaps = total - kept.len();
    let mut level = CantorLevel {
        depth,
        u: Some(u),
        min_len: kept[0].enclosure_length(),
        intervals: kept,
        min_gap: None,
        stats: LevelStats::default(),
        failures,
        dropped_overlaps,
    };
    level.measure();
    Ok(level)
}

fn to_f64_down(v: &Float) -> f64 {
    v.to_f64_round(Round::Down)
}

/// `H_U`: the union of `G_p` over primes `U < p <= 2U`.
pub fn build_h_u(cfg: &LiftConfig, coeffs: &EquationCoeffs, u: u64, beta: &Rational, gamma: &Rational) -> Result<CantorLevel> {
    if u < 3 {
        return Err(Error::Domain("U must be at least 3".into()));
    }
    let upper = u.checked_mul(2).ok_or_else(|| Error::Domain("U too large".into()))?;
    let blocks: Vec<Result<GxWindows>> = primes_in(u, upper)
        .into_par_iter()
        .map(|p| build_g_x(cfg, coeffs, p, beta, gamma))
        .collect();
    let mut intervals = Vec::new();
    let mut failures = Vec::new();
    let mut b1: Option<f64> = None;
    for g in blocks {
        let g = g?;
        if let Some(gap) = g.min_gap() {
            let v = to_f64_down(gap.lo()) * g.x as f64;
            b1 = Some(b1.map_or(v, |b| b.min(v)));
        }
        failures.extend(g.failures.into_iter().map(|(z, e)| (g.x, z, e)));
        intervals.extend(g.witnesses.into_iter().map(BasicInterval::from_witness));
    }
    let mut level = assemble(2, u, intervals, failures)?;
    let seed = CantorLevel::seed(beta, gamma, 128);
    let q = q_exponent(beta, gamma, &cfg.epsilon)?.to_f64();
    level.stats = measure_stats(&level, &seed, u, q, b1);
    Ok(level)
}

fn measure_stats(level: &CantorLevel, parents: &CantorLevel, u: u64, q: f64, b1: Option<f64>) -> LevelStats {
    let uf = u as f64;
    let b4 = parents
        .intervals
        .iter()
        .map(|p| {
            let n = level.intervals.iter().filter(|c| c.inside(p)).count();
            uf * p.length().to_f64() / (n as f64 * uf.ln())
        })
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    LevelStats {
        b1,
        b2: level.min_gap.as_ref().map(|g| to_f64_down(g.lo()) * uf * uf),
        b3: Some(to_f64_down(level.min_len.lo()) * uf.powf(q)),
        b4,
    }
}

/// Settings for [`refine_levels`].
#[derive(Clone, Debug, PartialEq)]
pub struct RefineParams {
    pub depth: u32,
    pub u1: u64,
    /// Upper limit on every `u_k`.
    pub u_cap: u64,
    /// Supplied constants; measured on `H_{u1}` when absent.
    pub b3: Option<f64>,
    pub b4: Option<f64>,
}

pub const DEFAULT_U_CAP: u64 = 1_000_000;
pub const MAX_DEPTH: u32 = 3;

impl Default for RefineParams {
    fn default() -> Self {
        Self {
            depth: 2,
            u1: 50,
            u_cap: DEFAULT_U_CAP,
            b3: None,
            b4: None,
        }
    }
}

/// Nested levels with the per-level counts and gaps of the lower bound.
#[derive(Clone, Debug)]
pub struct Refinement {
    pub levels: Vec<CantorLevel>,
    /// `u_1, u_2, ...`.
    pub u: Vec<u64>,
    /// Fewest level-`k` intervals inside one level-`(k-1)` interval; `m_1 = 1` for the seed.
    pub m: Vec<u64>,
    /// Smallest gap at level `k`; the seed length stands in for `delta_1`.
    pub delta: Vec<f64>,
    pub b3: Option<f64>,
    pub b4: Option<f64>,
}

impl Refinement {
    /// The finite-prefix lower bound for the extracted `(m_k, delta_k)`.
    pub fn bound(&self) -> Result<CantorBound> {
        cantor_lower_bound(&self.m, &self.delta)
    }
}

/// `u_k = min(cap, max(u^k, ceil(3 (B4/B3) u^q), u + 1))` for `u = u_{k-1}`.
pub fn next_u(prev: u64, k: u32, q: f64, ratio: f64, cap: u64) -> u64 {
    let pow = (prev as f64).powi(k as i32);
    let middle = (3.0 * ratio * (prev as f64).powf(q)).ceil();
    let v = pow.max(middle).max(prev as f64 + 1.0);
    if v >= cap as f64 {
        cap
    } else {
        v as u64
    }
}

/// `E_1 = (beta, 2 gamma)` and, for `k >= 2`, the windows of `H_{u_k}`
/// lying strictly inside an interval of `E_{k-1}`.
pub fn refine_levels(cfg: &LiftConfig, coeffs: &EquationCoeffs, beta: &Rational, gamma: &Rational, params: &RefineParams) -> Result<Refinement> {
    if params.depth == 0 || params.depth > MAX_DEPTH {
        return Err(Error::Domain(format!("depth must be in 1..={MAX_DEPTH}")));
    }
    if params.u1 < 3 {
        return Err(Error::Domain("u1 must be at least 3".into()));
    }
    check_exponent_cell(beta, gamma)?;
    let seed = CantorLevel::seed(beta, gamma, 128);
    let mut out = Refinement {
        m: vec![1],
        delta: vec![seed.intervals[0].length().to_f64()],
        levels: vec![seed],
        u: vec![params.u1],
        b3: params.b3,
        b4: params.b4,
    };
    if params.depth == 1 {
        return Ok(out);
    }
    let q = q_exponent(beta, gamma, &cfg.epsilon)?.to_f64();
    if out.b3.is_none() || out.b4.is_none() {
        let probe = build_h_u(cfg, coeffs, params.u1, beta, gamma)?;
        out.b3 = out.b3.or(probe.stats.b3);
        out.b4 = out.b4.or(probe.stats.b4);
    }
    let ratio = match (out.b3, out.b4) {
        (Some(b3), Some(b4)) if b3 > 0.0 => b4 / b3,
        _ => return Err(Error::Refinement("B3 and B4 could not be measured".into())),
    };
    for k in 2..=params.depth {
        let prev_u = *out.u.last().expect("u_1 present");
        let uk = next_u(prev_u, k, q, ratio, params.u_cap);
        if uk <= prev_u {
            return Err(Error::Refinement(format!("u cap {} does not exceed u_{} = {prev_u}", params.u_cap, k - 1)));
        }
        out.u.push(uk);
        let parent = out.levels.last().expect("previous level");
        let mut level = build_h_u(cfg, coeffs, uk, beta, gamma)?;
        let all = std::mem::take(&mut level.intervals);
        for mut iv in all {
            let at = parent.intervals.partition_point(|p| p.lo < iv.lo);
            if at > 0 && iv.inside(&parent.intervals[at - 1]) {
                iv.parent = Some(at - 1);
                level.intervals.push(iv);
            }
        }
        if level.intervals.is_empty() {
            return Err(Error::EmptyLevel(format!("no window of H_{uk} lies inside level {}", k - 1)));
        }
        level.depth = k;
        level.measure();
        let b1 = level.stats.b1;
        level.stats = measure_stats(&level, parent, uk, q, b1);
        let counts: Vec<usize> = (0..parent.len()).map(|i| level.children_of(i)).collect();
        let fewest = *counts.iter().min().expect("non-empty parent level");
        if fewest < 2 {
            let i = counts.iter().position(|&c| c == fewest).unwrap_or(0);
            return Err(Error::Refinement(format!("interval {i} of level {} has {fewest} children", k - 1)));
        }
        out.m.push(fewest as u64);
        let gap = level.min_gap.as_ref().expect("at least two children");
        out.delta.push(to_f64_down(gap.lo()));
        out.levels.push(level);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::parse_decimal;

    fn q(s: &str) -> Rational {
        parse_decimal(s).unwrap()
    }

    fn k(a: u64, b: u64, c: u64) -> EquationCoeffs {
        EquationCoeffs::new(a, b, c).unwrap()
    }

    // Independent evaluation of the bound, term by term, in rationals.
    fn oracle(s: &Rational, all_equal: bool) -> Rational {
        let d = s.clone().floor();
        let f = Rational::from(s - &d);
        let two_pow = if d == 2 { q("0.5") } else if d == 3 { q("0.25") } else { q("0.125") };
        let den = (q("2") + &f - two_pow) * (q("2") - &f);
        let v = (s.clone() + Rational::from(s * s) * s / den).recip();
        if all_equal {
            v
        } else {
            v * 2u32
        }
    }

    #[test]
    fn theorem1_values() {
        for s in ["2.5", "3.5", "2.01", "4.9"] {
            let s = q(s);
            assert_eq!(theorem1_bound(&k(1, 1, 1), &s).unwrap(), oracle(&s, true));
            assert_eq!(theorem1_bound(&k(1, 1, 2), &s).unwrap(), oracle(&s, false));
        }
        let v = theorem1_bound(&k(1, 1, 1), &q("2.5")).unwrap();
        assert_eq!(v, Rational::from((24, 185)));
        assert!((v.to_f64() - 0.129_729_729_729_729_7).abs() < 1e-15);
        let v = theorem1_bound(&k(1, 1, 1), &q("3.5")).unwrap();
        assert!((v.to_f64() - 0.061_714_285_714_285_7).abs() < 1e-15);
        assert!(theorem1_bound(&k(1, 1, 1), &q("2")).is_err());
    }

    #[test]
    fn q_and_r_values() {
        let (s, z) = (q("2.5"), q("0"));
        let r = r_exponent(&s, &s, &z).unwrap();
        assert_eq!(r, Rational::from((25, 12)));
        let qq = q_exponent(&s, &s, &z).unwrap();
        assert_eq!(qq, Rational::from((185, 24)));
        assert_eq!(theorem1_bound(&k(1, 1, 1), &s).unwrap(), qq.recip());

        let r = r_exponent(&q("2.2"), &q("2.3"), &z).unwrap();
        assert_eq!(r, Rational::from((529, 289)));
        assert!((r.to_f64() - 1.830_449_8).abs() < 1e-6);
        let qq = q_exponent(&q("2.2"), &q("2.3"), &z).unwrap();
        assert!((qq.to_f64() - 6.510_034_6).abs() < 1e-6);
    }

    #[test]
    fn epsilon_is_monotone() {
        let (b, g) = (q("2.2"), q("2.3"));
        let mut prev = (Rational::new(), Rational::new());
        for e in ["0", "0.01", "0.1", "1"] {
            let cur = (r_exponent(&b, &g, &q(e)).unwrap(), q_exponent(&b, &g, &q(e)).unwrap());
            assert!(cur.0 > prev.0 && cur.1 > prev.1);
            prev = cur;
        }
    }

    #[test]
    fn d_matches_theorem_at_the_limit() {
        let s = q("2.75");
        let z = q("0");
        for coeffs in [k(1, 1, 1), k(3, 1, 1)] {
            assert_eq!(dimension_bound(&coeffs, &s, &s, &z).unwrap(), theorem1_bound(&coeffs, &s).unwrap());
        }
    }

    #[test]
    fn middle_thirds() {
        let n = 300;
        let m = vec![2u64; n];
        let delta: Vec<f64> = (1..=n).map(|i| 3f64.powi(-(i as i32))).collect();
        let b = cantor_lower_bound(&m, &delta).unwrap();
        let (l2, l3) = (2f64.ln(), 3f64.ln());
        let at100 = b.quotients[100 - 2];
        assert!((at100 - 99.0 * l2 / (100.0 * l3 - l2)).abs() < 1e-12);
        assert!((at100 - 0.628_59).abs() < 1e-5);
        assert!((b.quotients[n - 2] - l2 / l3).abs() < 2e-3);
        assert!(b.quotients.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn halving_gaps_tend_to_one() {
        let n = 500;
        let m = vec![2u64; n];
        let delta: Vec<f64> = (1..=n).map(|i| 2f64.powi(-(i as i32)) * 0.5).collect();
        let b = cantor_lower_bound(&m, &delta).unwrap();
        let last = *b.quotients.last().unwrap();
        assert!(last > 0.99 && last < 1.0, "{last}");
    }

    #[test]
    fn single_step() {
        let b = cantor_lower_bound(&[3, 2], &[0.5, 0.01]).unwrap();
        assert_eq!(b.quotients.len(), 1);
        assert!((b.quotients[0] - 3f64.ln() / -(0.02f64.ln())).abs() < 1e-15);
        assert_eq!(b.estimate, b.quotients[0]);
        assert!(cantor_lower_bound(&[2, 2], &[0.5, 0.6]).is_err());
        assert!(cantor_lower_bound(&[2, 2], &[1.0, 0.5]).is_err());
        assert!(cantor_lower_bound(&[2], &[0.5]).is_err());
    }

    #[test]
    fn theorem1_is_reciprocal_of_q_on_a_grid() {
        let z = q("0");
        for i in 1..1000 {
            let s = Rational::from(2) + Rational::from((3 * i, 1000));
            let qq = q_exponent(&s, &s, &z).unwrap();
            assert_eq!(theorem1_bound(&k(1, 1, 1), &s).unwrap(), qq.clone().recip());
            assert_eq!(theorem1_bound(&k(2, 1, 3), &s).unwrap(), Rational::from(2) / qq);
        }
    }

    #[test]
    fn params_validate_the_cell() {
        let p = DimensionParams::new(q("2.1"), k(1, 1, 2), q("2.2"), q("2.3"), q("0.1")).unwrap();
        assert!(p.finite_bound().unwrap() < p.theorem1().unwrap() * 2u32);
        assert!(DimensionParams::new(q("2.25"), k(1, 1, 2), q("2.2"), q("2.3"), q("0.1")).is_err());
        assert!(DimensionParams::new(q("2.1"), k(1, 1, 2), q("2.2"), q("3.3"), q("0.1")).is_err());
    }

    #[test]
    fn seed_needs_two_intervals_for_the_bound() {
        assert!(cantor_lower_bound(&[1, 5], &[1.0, 0.001]).is_err());
    }

    #[test]
    fn u_recursion() {
        assert_eq!(next_u(10, 2, 1.5, 0.0, 1_000_000), 100);
        assert_eq!(next_u(10, 2, 3.0, 1.0, 1_000_000), 3000);
        assert_eq!(next_u(10, 2, 3.0, 1.0, 500), 500);
        assert_eq!(next_u(1, 2, 0.5, 0.0, 100), 2);
    }

    fn cfg() -> LiftConfig {
        LiftConfig::default()
    }

    #[test]
    fn g_x_all_equal_x100() {
        let (b, g) = (q("2.2"), q("2.3"));
        let gx = build_g_x(&cfg(), &k(1, 1, 1), 100, &b, &g).unwrap();
        assert!(!gx.witnesses.is_empty() && gx.witnesses.len() <= 2);
        let limit = Rational::from(&g + Rational::from((1, 10_000)));
        for w in &gx.witnesses {
            assert!([136, 137].contains(&w.window.z));
            assert!(*w.window.lo() > b && *w.window.hi() < limit);
            assert!(crate::lifter::verify_witness(&cfg().cert, w, 32));
        }
        if gx.witnesses.len() == 2 {
            assert_eq!(gx.min_gap().unwrap().sign(), Some(std::cmp::Ordering::Greater));
        }
    }

    #[test]
    fn h_u_is_the_union_of_its_blocks() {
        let (b, g) = (q("2.2"), q("2.3"));
        let c = k(1, 1, 2);
        let h = build_h_u(&cfg(), &c, 60, &b, &g).unwrap();
        let total: usize = primes_in(60, 120)
            .into_iter()
            .map(|p| build_g_x(&cfg(), &c, p, &b, &g).unwrap().witnesses.len())
            .sum();
        assert_eq!(h.len() + h.dropped_overlaps, total);
        assert!(h.is_disjoint());
        let st = &h.stats;
        assert!(st.b2.unwrap() > 0.0 && st.b3.unwrap() > 0.0 && st.b4.unwrap() > 0.0);
        assert!(matches!(build_h_u(&cfg(), &c, 2, &b, &g), Err(Error::Domain(_))));
    }

    #[test]
    fn depth_one_is_the_seed() {
        let r = refine_levels(&cfg(), &k(1, 1, 2), &q("2.2"), &q("2.3"), &RefineParams { depth: 1, ..Default::default() }).unwrap();
        assert_eq!(r.levels.len(), 1);
        let s = &r.levels[0].intervals[0];
        assert!(s.lo >= q("2.2") && s.hi <= q("4.6") && s.hi > q("4.599"));
        assert!(refine_levels(&cfg(), &k(1, 1, 2), &q("2.2"), &q("2.3"), &RefineParams { depth: 4, ..Default::default() }).is_err());
    }

    #[test]
    fn depth_two_nests() {
        let params = RefineParams {
            depth: 2,
            u1: 50,
            u_cap: 120,
            ..Default::default()
        };
        let c = cfg();
        let r = refine_levels(&c, &k(1, 1, 2), &q("2.2"), &q("2.3"), &params).unwrap();
        assert_eq!(r.levels.len(), 2);
        assert_eq!(r.u, vec![50, 120]);
        let (top, low) = (&r.levels[0], &r.levels[1]);
        assert!(low.is_disjoint() && low.len() >= 2);
        for iv in &low.intervals {
            assert!(iv.inside(&top.intervals[iv.parent.unwrap()]));
            let w = iv.witness.as_ref().unwrap();
            assert!(crate::lifter::verify_witness(&c.cert, w, 8));
        }
        assert!(r.delta[1] < r.delta[0]);
        assert_eq!(r.m, vec![1, low.len() as u64]);
    }
}
