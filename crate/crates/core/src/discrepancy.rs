//! Box discrepancy of point sets in one and two dimensions, exponential
//! sums and the two analytic right-hand sides used to bound them.
//!
//! Discrepancy is taken over two-sided boxes `[a, b)` (products of them in
//! two dimensions). Coordinates are held exactly; all points are scaled to
//! integers over a common denominator `D`, and each box candidate is scored
//! as `U * count - W * length` with `U = D^dim` and `W = N * (other side)`.

use std::f64::consts::TAU;

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::decimal::parse_decimal;
use crate::error::{Error, Result};

/// Largest two-dimensional set handled exactly.
pub const DEFAULT_EXACT_LIMIT: usize = 512;
/// Grid lines per axis in the approximate two-dimensional mode.
pub const APPROX_GRID: usize = 64;

/// Points with every coordinate in `[0, 1)`, stored exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<Rational>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<Rational>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Domain(format!("dimension {dim} is not supported")));
        }
        if coords.len() % dim != 0 {
            return Err(Error::Domain("coordinate count is not a multiple of the dimension".into()));
        }
        if let Some(c) = coords.iter().find(|c| **c < 0 || **c >= 1) {
            return Err(Error::Domain(format!("coordinate {c} outside [0, 1)")));
        }
        Ok(Self { dim, coords })
    }

    /// Exact conversion of finite doubles.
    pub fn from_f64(dim: usize, coords: &[f64]) -> Result<Self> {
        let coords = coords
            .iter()
            .map(|&v| Rational::from_f64(v).ok_or_else(|| Error::Domain(format!("non-finite coordinate {v}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[Rational] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(Rational::to_f64).collect()
    }

    /// The set restricted to one coordinate.
    pub fn marginal(&self, axis: usize) -> Result<PointSet> {
        if axis >= self.dim {
            return Err(Error::Domain(format!("no axis {axis}")));
        }
        let c = (0..self.len()).map(|i| self.point(i)[axis].clone()).collect();
        PointSet::new(1, c)
    }

    fn common_denominator(&self) -> Integer {
        self.coords.iter().fold(Integer::from(1), |acc, c| acc.lcm(c.denom()))
    }
}

/// One point per line, whitespace-separated decimals; `#` starts a comment.
pub fn parse_points(text: &str) -> Result<PointSet> {
    let mut dim = None;
    let mut coords = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        match dim {
            None => dim = Some(fields.len()),
            Some(d) if d != fields.len() => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {d} fields, found {}", fields.len()),
                })
            }
            _ => {}
        }
        for f in fields {
            let v = parse_decimal(f).map_err(|_| Error::Parse {
                line,
                msg: format!("invalid number {f:?}"),
            })?;
            if v < 0 || v >= 1 {
                return Err(Error::Parse {
                    line,
                    msg: format!("coordinate {f} outside [0, 1)"),
                });
            }
            coords.push(v);
        }
    }
    let dim = dim.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "no points".into(),
    })?;
    PointSet::new(dim, coords).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })
}

/// Exact integer arithmetic used by the box scans.
trait Scalar: Clone + Ord + Send + Sync {
    fn from_integer(v: &Integer) -> Self;
    fn from_u64(v: u64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn to_integer(&self) -> Integer;
}

impl Scalar for i128 {
    fn from_integer(v: &Integer) -> Self {
        v.to_i128().expect("value fits the fast path")
    }
    fn from_u64(v: u64) -> Self {
        v as i128
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn to_integer(&self) -> Integer {
        Integer::from(*self)
    }
}

impl Scalar for Integer {
    fn from_integer(v: &Integer) -> Self {
        v.clone()
    }
    fn from_u64(v: u64) -> Self {
        Integer::from(v)
    }
    fn add(&self, o: &Self) -> Self {
        Integer::from(self + o)
    }
    fn sub(&self, o: &Self) -> Self {
        Integer::from(self - o)
    }
    fn mul(&self, o: &Self) -> Self {
        Integer::from(self * o)
    }
    fn to_integer(&self) -> Integer {
        self.clone()
    }
}

fn max_opt<S: Scalar>(a: Option<S>, b: S) -> S {
    match a {
        Some(a) if a >= b => a,
        _ => b,
    }
}

/// Best `U * count - W * length` over closed ranges `[y_k, y_l]` of sorted `ys`.
fn scan_excess<S: Scalar>(ys: &[S], w: &S, u: &S) -> Option<S> {
    let mut best_left: Option<S> = None;
    let mut best: Option<S> = None;
    let mut cum = 0u64;
    let mut i = 0;
    while i < ys.len() {
        let y = &ys[i];
        let mut j = i;
        while j < ys.len() && ys[j] == *y {
            j += 1;
        }
        let wy = w.mul(y);
        let left = wy.sub(&u.mul(&S::from_u64(cum)));
        cum += (j - i) as u64;
        let bl = max_opt(best_left.take(), left);
        let cand = u.mul(&S::from_u64(cum)).sub(&wy).add(&bl);
        best_left = Some(bl);
        best = Some(max_opt(best, cand));
        i = j;
    }
    best
}

/// Best `W * length - U * count` over `[c, d)` with `c` closed at 0 or open
/// at a point, `d` at a point or at the top `top`.
fn scan_deficit<S: Scalar>(ys: &[S], w: &S, u: &S, top: &S) -> S {
    let zero = S::from_u64(0);
    let mut best_left = zero.clone();
    let mut best = zero;
    let mut cum = 0u64;
    let mut i = 0;
    while i < ys.len() {
        let y = &ys[i];
        let mut j = i;
        while j < ys.len() && ys[j] == *y {
            j += 1;
        }
        let wy = w.mul(y);
        let cand = wy.sub(&u.mul(&S::from_u64(cum))).add(&best_left);
        best = max_opt(Some(best), cand);
        cum += (j - i) as u64;
        let open = u.mul(&S::from_u64(cum)).sub(&wy);
        best_left = max_opt(Some(best_left), open);
        i = j;
    }
    let cand = w.mul(top).sub(&u.mul(&S::from_u64(cum))).add(&best_left);
    max_opt(Some(best), cand)
}

struct Scaled<S> {
    n: u64,
    d: S,
    pts: Vec<Vec<S>>,
    den: Integer,
}

fn scale<S: Scalar>(ps: &PointSet) -> Scaled<S> {
    let den = ps.common_denominator();
    let pts = (0..ps.len())
        .map(|i| {
            ps.point(i)
                .iter()
                .map(|c| S::from_integer(&(Integer::from(c.numer() * &den) / c.denom())))
                .collect()
        })
        .collect();
    Scaled {
        n: ps.len() as u64,
        d: S::from_integer(&den),
        pts,
        den,
    }
}

fn fits_fast_path(ps: &PointSet) -> bool {
    let den = ps.common_denominator();
    let bits = den.significant_bits() as usize * ps.dim() + (64 - (ps.len() as u64).leading_zeros() as usize) + 4;
    bits < 126
}

fn finish(best: Integer, n: u64, den: &Integer, dim: usize) -> Rational {
    let mut unit = Integer::from(n);
    for _ in 0..dim {
        unit *= den;
    }
    Rational::from((best, unit))
}

fn disc1<S: Scalar>(ps: &PointSet) -> Rational {
    let sc = scale::<S>(ps);
    let mut ys: Vec<S> = sc.pts.into_iter().map(|p| p[0].clone()).collect();
    ys.sort();
    let w = S::from_u64(sc.n);
    let u = sc.d.clone();
    let up = scan_excess(&ys, &w, &u).expect("non-empty set");
    let down = scan_deficit(&ys, &w, &u, &sc.d);
    finish(up.max(down).to_integer(), sc.n, &sc.den, 1)
}

/// Exact extreme discrepancy of a one-dimensional set.
pub fn discrepancy_1d(ps: &PointSet) -> Result<Rational> {
    if ps.dim() != 1 {
        return Err(Error::Domain("discrepancy_1d needs a one-dimensional set".into()));
    }
    if ps.is_empty() {
        return Err(Error::Domain("discrepancy of an empty set".into()));
    }
    Ok(if fits_fast_path(ps) {
        disc1::<i128>(ps)
    } else {
        disc1::<Integer>(ps)
    })
}

/// Two-dimensional discrepancy, exact or bracketed.
#[derive(Clone, Debug, PartialEq)]
pub enum Discrepancy2d {
    Exact(Rational),
    /// `lower <= D <= lower + slack`.
    Approx { lower: Rational, slack: Rational },
}

impl Discrepancy2d {
    pub fn lower(&self) -> &Rational {
        match self {
            Self::Exact(v) => v,
            Self::Approx { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> Rational {
        match self {
            Self::Exact(v) => v.clone(),
            Self::Approx { lower, slack } => Rational::from(lower + slack),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Exact(_))
    }
}

fn insert_sorted<S: Scalar>(v: &mut Vec<S>, y: S) {
    let at = v.partition_point(|e| *e <= y);
    v.insert(at, y);
}

fn disc2_exact<S: Scalar>(ps: &PointSet) -> Rational {
    let sc = scale::<S>(ps);
    let n = sc.n;
    let u = sc.d.mul(&sc.d);
    let mut pts: Vec<(S, S)> = sc.pts.into_iter().map(|p| (p[0].clone(), p[1].clone())).collect();
    pts.sort();
    let mut xs: Vec<S> = pts.iter().map(|p| p.0.clone()).collect();
    xs.dedup();
    let nn = S::from_u64(n);

    // closed x-stripes [xs[i], xs[j]]
    let excess = (0..xs.len())
        .into_par_iter()
        .filter_map(|i| {
            let start = pts.partition_point(|p| p.0 < xs[i]);
            let mut ys: Vec<S> = Vec::new();
            let mut k = start;
            let mut best: Option<S> = None;
            for xj in &xs[i..] {
                while k < pts.len() && pts[k].0 == *xj {
                    insert_sorted(&mut ys, pts[k].1.clone());
                    k += 1;
                }
                let w = nn.mul(&xj.sub(&xs[i]));
                if let Some(v) = scan_excess(&ys, &w, &u) {
                    best = Some(max_opt(best, v));
                }
            }
            best
        })
        .max();

    // stripes (a, b) open at a point or [0, b), with b at a point or at the top
    let starts: Vec<Option<usize>> = std::iter::once(None).chain((0..xs.len()).map(Some)).collect();
    let deficit = starts
        .into_par_iter()
        .map(|s| {
            let (a, mut k) = match s {
                None => (S::from_u64(0), 0),
                Some(i) => (xs[i].clone(), pts.partition_point(|p| p.0 <= xs[i])),
            };
            let mut ys: Vec<S> = Vec::new();
            let mut best = S::from_u64(0);
            let rest: Vec<S> = xs.iter().filter(|x| **x > a).cloned().chain(std::iter::once(sc.d.clone())).collect();
            for b in rest {
                while k < pts.len() && pts[k].0 < b {
                    insert_sorted(&mut ys, pts[k].1.clone());
                    k += 1;
                }
                let w = nn.mul(&b.sub(&a));
                best = max_opt(Some(best), scan_deficit(&ys, &w, &u, &sc.d));
            }
            best
        })
        .max()
        .expect("at least one stripe");
    let best = max_opt(excess, deficit);
    finish(best.to_integer(), n, &sc.den, 2)
}

/// Grid lines `0 = g_0 < ... < g_m = D` taken at coordinate quantiles.
fn grid_lines<S: Scalar>(sorted: &[S], top: &S, g: usize) -> Vec<S> {
    let mut lines = vec![S::from_u64(0)];
    let n = sorted.len();
    for k in 1..g {
        lines.push(sorted[(k * n / g).min(n - 1)].clone());
    }
    lines.push(top.clone());
    lines.sort();
    lines.dedup();
    lines
}

fn slab_stats<S: Scalar>(sorted: &[S], lines: &[S]) -> (u64, S) {
    let mut most = 0u64;
    let mut gap = S::from_u64(0);
    for w in lines.windows(2) {
        let lo = sorted.partition_point(|v| *v < w[0]);
        let hi = sorted.partition_point(|v| *v < w[1]);
        most = most.max((hi - lo) as u64);
        gap = max_opt(Some(gap), w[1].sub(&w[0]));
    }
    (most, gap)
}

fn disc2_approx<S: Scalar>(ps: &PointSet, g: usize) -> Discrepancy2d {
    let sc = scale::<S>(ps);
    let n = sc.n;
    let u = sc.d.mul(&sc.d);
    let nn = S::from_u64(n);
    let mut sx: Vec<S> = sc.pts.iter().map(|p| p[0].clone()).collect();
    let mut sy: Vec<S> = sc.pts.iter().map(|p| p[1].clone()).collect();
    sx.sort();
    sy.sort();
    let gx = grid_lines(&sx, &sc.d, g);
    let gy = grid_lines(&sy, &sc.d, g);
    let (mx, my) = (gx.len(), gy.len());
    // prefix[i][k] = #points with x < gx[i] and y < gy[k]
    let mut cells = vec![vec![0u64; my]; mx];
    for p in &sc.pts {
        let i = gx.partition_point(|v| *v <= p[0]);
        let k = gy.partition_point(|v| *v <= p[1]);
        cells[i][k] += 1;
    }
    let mut prefix = vec![vec![0u64; my]; mx];
    for i in 0..mx {
        for k in 0..my {
            let mut v = cells[i][k];
            if i > 0 {
                v += prefix[i - 1][k];
            }
            if k > 0 {
                v += prefix[i][k - 1];
            }
            if i > 0 && k > 0 {
                v -= prefix[i - 1][k - 1];
            }
            prefix[i][k] = v;
        }
    }
    // prefix[i][k] counts points strictly below gx[i], gy[k] once shifted
    let count = |i0: usize, i1: usize, k0: usize, k1: usize| -> u64 {
        let at = |i: usize, k: usize| if i == 0 || k == 0 { 0 } else { prefix[i - 1][k - 1] };
        at(i1, k1) + at(i0, k0) - at(i0, k1) - at(i1, k0)
    };
    let best = (0..mx)
        .into_par_iter()
        .map(|i0| {
            let mut best = S::from_u64(0);
            for i1 in i0 + 1..mx {
                let w = nn.mul(&gx[i1].sub(&gx[i0]));
                for k0 in 0..my {
                    for k1 in k0 + 1..my {
                        let area = w.mul(&gy[k1].sub(&gy[k0]));
                        let c = u.mul(&S::from_u64(count(i0, i1, k0, k1)));
                        let v = if c >= area { c.sub(&area) } else { area.sub(&c) };
                        best = max_opt(Some(best), v);
                    }
                }
            }
            best
        })
        .max()
        .expect("grid has at least one box");
    let lower = finish(best.to_integer(), n, &sc.den, 2);
    let (px, gapx) = slab_stats(&sx, &gx);
    let (py, gapy) = slab_stats(&sy, &gy);
    let counts = Rational::from((Integer::from(2 * (px + py)), Integer::from(n)));
    let gaps = Rational::from((gapx.add(&gapy).to_integer() * 2u32, sc.den.clone()));
    Discrepancy2d::Approx {
        lower,
        slack: counts + gaps,
    }
}

pub fn discrepancy_2d(ps: &PointSet) -> Result<Discrepancy2d> {
    discrepancy_2d_with_limit(ps, DEFAULT_EXACT_LIMIT)
}

/// Exact for at most `exact_limit` points, otherwise a lower bound over
/// quantile grid boxes with a declared slack.
pub fn discrepancy_2d_with_limit(ps: &PointSet, exact_limit: usize) -> Result<Discrepancy2d> {
    if ps.dim() != 2 {
        return Err(Error::Domain("discrepancy_2d needs a two-dimensional set".into()));
    }
    if ps.is_empty() {
        return Err(Error::Domain("discrepancy of an empty set".into()));
    }
    let fast = fits_fast_path(ps);
    Ok(match (ps.len() <= exact_limit, fast) {
        (true, true) => Discrepancy2d::Exact(disc2_exact::<i128>(ps)),
        (true, false) => Discrepancy2d::Exact(disc2_exact::<Integer>(ps)),
        (false, true) => disc2_approx::<i128>(ps, APPROX_GRID),
        (false, false) => disc2_approx::<Integer>(ps, APPROX_GRID),
    })
}

/// `|1/N sum exp(2 pi i <k, x_n>)|`.
pub fn exp_sum(ps: &PointSet, k: &[i64]) -> Result<f64> {
    if k.len() != ps.dim() {
        return Err(Error::Domain("frequency arity differs from the dimension".into()));
    }
    if k.iter().all(|&v| v == 0) {
        return Err(Error::Domain("frequency must be non-zero".into()));
    }
    if ps.is_empty() {
        return Err(Error::Domain("exponential sum of an empty set".into()));
    }
    let xs = ps.to_f64();
    Ok(exp_sum_f64(&xs, ps.dim(), k))
}

fn exp_sum_f64(xs: &[f64], dim: usize, k: &[i64]) -> f64 {
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for p in xs.chunks(dim) {
        let t: f64 = p.iter().zip(k).map(|(x, &kk)| (x * kk as f64).rem_euclid(1.0)).sum();
        let (s, c) = (TAU * t.rem_euclid(1.0)).sin_cos();
        re += c;
        im += s;
    }
    let n = (xs.len() / dim) as f64;
    (re.hypot(im) / n).min(1.0)
}

/// `prod max(1, |k_i|)`.
pub fn nu(k: &[i64]) -> f64 {
    k.iter().map(|&v| v.unsigned_abs().max(1) as f64).product()
}

fn frequencies(dim: usize, kmax: i64) -> Vec<Vec<i64>> {
    let range: Vec<i64> = (-kmax..=kmax).collect();
    let mut out: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                range.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out.retain(|k| k.iter().any(|&v| v != 0));
    out
}

/// `1/K + sum over 0 < |k|_inf <= K of |exp_sum(k)| / nu(k)`, without the constant.
pub fn etk_bracket(ps: &PointSet, kmax: u32) -> Result<f64> {
    if kmax == 0 {
        return Err(Error::Domain("K must be positive".into()));
    }
    if ps.is_empty() {
        return Err(Error::Domain("empty point set".into()));
    }
    let xs = ps.to_f64();
    let dim = ps.dim();
    let sum: f64 = frequencies(dim, kmax as i64)
        .par_iter()
        .map(|k| exp_sum_f64(&xs, dim, k) / nu(k))
        .sum();
    Ok(1.0 / kmax as f64 + sum)
}

/// Right-hand side of the Erdős–Turán–Koksma inequality with constant `c_d`.
pub fn etk_rhs(ps: &PointSet, kmax: u32, c_d: f64) -> Result<f64> {
    if !(c_d > 0.0) {
        return Err(Error::Domain("constant must be positive".into()));
    }
    Ok(c_d * etk_bracket(ps, kmax)?)
}

/// Smallest constant for which the inequality holds on `ps` at this `K`.
pub fn etk_min_constant(discrepancy: f64, ps: &PointSet, kmax: u32) -> Result<f64> {
    Ok(discrepancy / etk_bracket(ps, kmax)?)
}

/// `C (L lambda^(1/(2^k-2)) + L^(1-2^(2-k)) lambda^(-1/(2^k-2)))`.
pub fn vdc_rhs(len: f64, lambda: f64, k: u32, c_hk: f64) -> Result<f64> {
    if k < 4 || k > 60 {
        return Err(Error::Domain("derivative order must be in 4..=60".into()));
    }
    if !(len >= 1.0) {
        return Err(Error::Domain("interval length must be at least 1".into()));
    }
    if !(lambda > 0.0) || !(c_hk > 0.0) {
        return Err(Error::Domain("lambda and constant must be positive".into()));
    }
    let e = 1.0 / ((1u64 << k) - 2) as f64;
    let second = len.powf(1.0 - 2f64.powi(2 - k as i32));
    Ok(c_hk * (len * lambda.powf(e) + second * lambda.powf(-e)))
}

/// Measured sum against the bound shape for `f(n) = theta n^alpha` on `(a, b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct VdcReport {
    pub sum_abs: f64,
    pub lambda: f64,
    /// Ratio of the largest to the smallest `|f^(k)|` on the range.
    pub h: f64,
    pub rhs: f64,
    /// `sum_abs / rhs`: the smallest constant consistent with this range.
    pub ratio: f64,
}

pub fn vdc_power_phase(theta: f64, alpha: f64, a: u64, b: u64, k: u32) -> Result<VdcReport> {
    if b <= a {
        return Err(Error::Domain("need a < b".into()));
    }
    let deriv = |x: f64| -> f64 {
        let mut c = theta;
        for j in 0..k {
            c *= alpha - j as f64;
        }
        (c * x.powf(alpha - k as f64)).abs()
    };
    let lo_x = (a + 1) as f64;
    let (d1, d2) = (deriv(lo_x), deriv(b as f64));
    let (lambda, big) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
    if !(lambda > 0.0) {
        return Err(Error::Domain("k-th derivative vanishes".into()));
    }
    let p = 192;
    let th = Float::with_val(p, theta);
    let al = Float::with_val(p, alpha);
    let (re, im) = (a + 1..=b)
        .into_par_iter()
        .map(|n| {
            let v = Float::with_val(p, n).pow(&al) * &th;
            let f = Float::with_val(p, &v - v.clone().floor()).to_f64();
            let (s, c) = (TAU * f).sin_cos();
            (c, s)
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    let sum_abs = re.hypot(im);
    let rhs = vdc_rhs((b - a) as f64, lambda, k, 1.0)?;
    Ok(VdcReport {
        sum_abs,
        lambda,
        h: big / lambda,
        rhs,
        ratio: sum_abs / rhs,
    })
}
