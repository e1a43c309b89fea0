//! Admissible integer sets `J(x)` and the exact exponents `alpha(x, z)`.
//!
//! For `a != c` the exponent solves `a x^u + b = c z^u`; for `a = b = c`
//! it solves `x^u + (x + 1/(x ceil(ln x)))^u = z^u`. Both are bracketed
//! by bisection where every sign is certified by interval evaluation.

use std::cmp::Ordering;

use rug::float::Round;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::bigfloat::{CertifiedReal, Certifier};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    AGtC,
    ALtC,
    AllEqual,
    /// `a = c != b`: the roles of `(a, x)` and `(b, y)` are exchanged.
    Swapped,
}

/// Which of the three essential constructions applies after normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    AGtC,
    ALtC,
    AllEqual,
}

/// Coefficients of `a x + b y = c z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationCoeffs {
    a: u64,
    b: u64,
    c: u64,
    case_tag: CaseTag,
}

/// Normalized coefficients the construction actually runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Effective {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub shape: Shape,
}

impl EquationCoeffs {
    pub fn new(a: u64, b: u64, c: u64) -> Result<Self> {
        if a == 0 || b == 0 || c == 0 {
            return Err(Error::Domain("coefficients must be positive".into()));
        }
        let case_tag = if a == b && b == c {
            CaseTag::AllEqual
        } else if a == c {
            CaseTag::Swapped
        } else if a > c {
            CaseTag::AGtC
        } else {
            CaseTag::ALtC
        };
        Ok(Self { a, b, c, case_tag })
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn c(&self) -> u64 {
        self.c
    }

    pub fn case_tag(&self) -> CaseTag {
        self.case_tag
    }

    pub fn all_equal(&self) -> bool {
        self.case_tag == CaseTag::AllEqual
    }

    pub fn effective(&self) -> Effective {
        let (a, b, c) = match self.case_tag {
            CaseTag::AllEqual => (1, 1, 1),
            CaseTag::Swapped => (self.b, self.a, self.c),
            _ => (self.a, self.b, self.c),
        };
        let shape = if self.case_tag == CaseTag::AllEqual {
            Shape::AllEqual
        } else if a > c {
            Shape::AGtC
        } else {
            Shape::ALtC
        };
        Effective { a, b, c, shape }
    }

    /// `a fx + b fy = c fz` with the original coefficients.
    pub fn holds(&self, fx: &Integer, fy: &Integer, fz: &Integer) -> bool {
        Integer::from(fx * self.a) + Integer::from(fy * self.b) == Integer::from(fz * self.c)
    }
}

/// Validates `beta < gamma` and `floor(beta) = floor(gamma) >= 2`.
pub fn check_exponent_cell(beta: &Rational, gamma: &Rational) -> Result<()> {
    if beta >= gamma {
        return Err(Error::Domain("beta must be smaller than gamma".into()));
    }
    let fb = beta.clone().floor();
    let fg = gamma.clone().floor();
    if fb != fg || fb < 2 {
        return Err(Error::Domain(
            "beta and gamma must share the same integer part, at least 2".into(),
        ));
    }
    Ok(())
}

/// The window `(theta, theta + ell)` of exponents attached to `(x, z)`.
///
/// `theta` encloses `alpha(x, z)` and `ell` encloses the stability width.
/// The certified exponent set is the closed interval `[lo, hi]`, built as
/// `[theta.lo, theta.lo + ell.lo]` and stored explicitly so that a window
/// read back from a record is checked on exactly the emitted bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentWindow {
    pub x: u64,
    pub z: u64,
    pub theta: CertifiedReal,
    pub ell: CertifiedReal,
    pub beta: Rational,
    pub gamma: Rational,
    lo: Float,
    hi: Float,
}

impl ExponentWindow {
    pub fn new(x: u64, z: u64, theta: CertifiedReal, ell: CertifiedReal, beta: Rational, gamma: Rational) -> Result<Self> {
        if ell.sign() != Some(Ordering::Greater) {
            return Err(Error::Certification("window length is not certified positive".into()));
        }
        let p = theta.precision_bits().max(ell.precision_bits());
        let lo = theta.lo().clone();
        let hi = Float::with_val_round(p, theta.lo() + ell.lo(), Round::Down).0;
        Self::from_parts(x, z, theta, ell, beta, gamma, lo, hi)
    }

    /// Rebuilds a window with explicit certified bounds.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        x: u64,
        z: u64,
        theta: CertifiedReal,
        ell: CertifiedReal,
        beta: Rational,
        gamma: Rational,
        lo: Float,
        hi: Float,
    ) -> Result<Self> {
        let w = Self {
            x,
            z,
            theta,
            ell,
            beta,
            gamma,
            lo,
            hi,
        };
        if !(w.lo < w.hi) {
            return Err(Error::Certification("empty exponent window".into()));
        }
        if !w.within_bounds() {
            return Err(Error::Certification(format!(
                "window for (x, z) = ({x}, {z}) leaves (beta, gamma + x^-2)"
            )));
        }
        Ok(w)
    }

    /// `beta < theta.lo`, `beta < lo` and `theta.hi + ell.hi < gamma + x^-2`.
    pub fn within_bounds(&self) -> bool {
        let p = self.theta.precision_bits().max(self.ell.precision_bits());
        let top = Float::with_val_round(p, self.theta.hi() + self.ell.hi(), Round::Up).0;
        let limit = Rational::from(&self.gamma + Rational::from((1, Integer::from(self.x).square())));
        *self.theta.lo() > self.beta && self.lo > self.beta && top < limit && self.hi < limit
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    /// Upper bound on the length of the certified set.
    pub fn length(&self) -> Float {
        Float::with_val_round(self.hi.prec().max(self.lo.prec()), &self.hi - &self.lo, Round::Up).0
    }

    /// The certified exponent set as an interval.
    pub fn interval(&self) -> CertifiedReal {
        CertifiedReal::new(self.lo.clone(), self.hi.clone()).expect("lo < hi")
    }

    /// Same window with its certified length multiplied by `factor`.
    /// No invariant is checked; used to probe how sharp a window is.
    pub fn inflated(&self, factor: u64) -> Self {
        let p = self.hi.prec().max(self.lo.prec()) + 64;
        let len = Float::with_val(p, &self.hi - &self.lo) * factor;
        Self {
            ell: self.ell.scale_u64(factor),
            hi: Float::with_val(p, &self.lo + &len),
            ..self.clone()
        }
    }
}

/// Integer points of `J(x)`, ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdmissibleSet {
    pub x: u64,
    pub zs: Vec<u64>,
    /// Integers whose membership could not be decided at the precision cap.
    pub excluded: Vec<u64>,
}

fn rational_interval(q: &Rational, p: u32) -> CertifiedReal {
    CertifiedReal::from_rational(q, p)
}

/// Enclosures of the open interval `(L, R)` defining `J(x)`.
fn j_endpoints(cert: &Certifier, eff: &Effective, x: u64, beta: &Rational, gamma: &Rational, p: u32) -> Result<(CertifiedReal, CertifiedReal)> {
    let xr = CertifiedReal::from_u64(x, p.max(64));
    let inv = |q: &Rational| rational_interval(&Rational::from(q.recip_ref()), p);
    let ratio = |n: u64, d: u64| rational_interval(&Rational::from((n, d)), p);
    match eff.shape {
        Shape::AllEqual => {
            let l = cert.ceil_ln(x)?;
            let shifted = rational_interval(&(Rational::from(x) + Rational::from((1, x * l))), p);
            let two = CertifiedReal::from_u64(2, p);
            let left = two.powr(&inv(gamma))?.mul(&shifted);
            let right = two.powr(&inv(beta))?.mul(&xr);
            Ok((left, right))
        }
        Shape::AGtC | Shape::ALtC => {
            let x2lnx = cert.ln_u64(x, p)?.mul(&CertifiedReal::from_u64(x, p.max(64)).scale_u64(x));
            let boc = ratio(eff.b, 1).div(&x2lnx.scale_u64(eff.c))?;
            let aoc = ratio(eff.a, eff.c);
            if eff.shape == Shape::AGtC {
                let left = boc.add(&aoc).powr(&inv(gamma))?.mul(&xr);
                let right = aoc.powr(&inv(beta))?.mul(&xr);
                Ok((left, right))
            } else {
                let inner = ratio(eff.a, 1).div(&ratio(eff.c, 1).sub(&ratio(eff.b, 1).div(&x2lnx)?))?;
                let left = inner.powr(&inv(beta))?.mul(&xr);
                let right = aoc.powr(&inv(gamma))?.mul(&xr);
                Ok((left, right))
            }
        }
    }
}

fn ints_in(iv: &CertifiedReal) -> Vec<u64> {
    let lo = iv.lo().to_integer_round(Round::Up).and_then(|(i, _)| i.to_u64());
    let hi = iv.hi().to_integer_round(Round::Down).and_then(|(i, _)| i.to_u64());
    match (lo, hi) {
        (Some(l), Some(h)) if l <= h => (l..=h).collect(),
        _ => Vec::new(),
    }
}

/// The admissible set `J(x)` for the normalized case of `coeffs`.
///
/// An empty result means `x` lies below the effective threshold; it is
/// not an error.
pub fn interval_j(cert: &Certifier, coeffs: &EquationCoeffs, x: u64, beta: &Rational, gamma: &Rational) -> Result<AdmissibleSet> {
    check_exponent_cell(beta, gamma)?;
    if x < 3 {
        return Err(Error::Domain("x must be at least 3".into()));
    }
    let eff = coeffs.effective();
    let mut last = None;
    for p in cert.steps().filter(|&p| p >= 128.min(cert.cap_bits())) {
        let (l, r) = j_endpoints(cert, &eff, x, beta, gamma, p)?;
        let mut ambiguous = ints_in(&l);
        ambiguous.extend(ints_in(&r));
        let done = ambiguous.is_empty();
        last = Some((l, r, ambiguous));
        if done {
            break;
        }
    }
    let (l, r, mut excluded) = last.expect("at least one precision step");
    let first = l.hi().to_integer_round(Round::Down).and_then(|(i, _)| i.to_u64()).map(|i| i + 1);
    let end = r.lo().to_integer_round(Round::Up).and_then(|(i, _)| i.to_u64());
    let mut zs: Vec<u64> = match (first, end) {
        (Some(f), Some(e)) if f < e => (f..e).collect(),
        _ => Vec::new(),
    };
    if eff.shape == Shape::AGtC {
        zs.retain(|z| z % x != 0);
    }
    excluded.sort_unstable();
    excluded.dedup();
    Ok(AdmissibleSet { x, zs, excluded })
}

/// Interval value of the defining function at the exponent `u`.
fn defining_function(cert: &Certifier, eff: &Effective, x: u64, z: u64, u: &CertifiedReal, p: u32) -> Result<CertifiedReal> {
    let zu = cert.pow_enclose(z, u, p)?.scale_u64(eff.c);
    match eff.shape {
        Shape::AllEqual => {
            let l = cert.ceil_ln(x)?;
            let shifted = rational_interval(&(Rational::from(x) + Rational::from((1, x * l))), p);
            let xu = cert.pow_enclose(x, u, p)?;
            Ok(xu.add(&shifted.powr(&u.with_precision(p))?).sub(&zu))
        }
        _ => {
            let xu = cert.pow_enclose(x, u, p)?.scale_u64(eff.a);
            Ok(xu.add(&CertifiedReal::from_u64(eff.b, p)).sub(&zu))
        }
    }
}

fn certified_sign(cert: &Certifier, eff: &Effective, x: u64, z: u64, u: &Float) -> Result<Ordering> {
    let pt = CertifiedReal::point(u.clone());
    let floor_bits = u.prec() + 32;
    let mut steps: Vec<u32> = cert.steps().filter(|&p| p >= floor_bits).collect();
    if steps.is_empty() {
        steps.push(cert.cap_bits());
    }
    for p in steps {
        if let Some(s) = defining_function(cert, eff, x, z, &pt, p)?.sign() {
            return Ok(s);
        }
    }
    Err(Error::Undecidable(format!("sign of the defining function at x = {x}, z = {z}")))
}

/// `2^-80`, the default bracket width.
pub fn default_width_target() -> Rational {
    Rational::from((1, Integer::from(1) << 80))
}

fn bits_for(target: &Rational) -> Result<u32> {
    if *target <= 0 {
        return Err(Error::Domain("width target must be positive".into()));
    }
    let mut bits = 0u32;
    let mut w = Rational::from(1);
    while w > *target {
        w /= 2;
        bits += 1;
        if bits > 100_000 {
            return Err(Error::Domain("width target too small".into()));
        }
    }
    Ok(bits)
}

/// Certified bracket of `alpha(x, z)` inside `(beta, gamma)` of width at most `width_target`.
pub fn solve_alpha(
    cert: &Certifier,
    coeffs: &EquationCoeffs,
    x: u64,
    z: u64,
    beta: &Rational,
    gamma: &Rational,
    width_target: &Rational,
) -> Result<CertifiedReal> {
    check_exponent_cell(beta, gamma)?;
    let eff = coeffs.effective();
    let ep = bits_for(width_target)? + 72;
    let target = Float::with_val_round(ep, width_target, Round::Down).0;
    let mut lo = Float::with_val_round(ep, beta, Round::Up).0;
    let mut hi = Float::with_val_round(ep, gamma, Round::Down).0;
    let s_lo = certified_sign(cert, &eff, x, z, &lo)?;
    let s_hi = certified_sign(cert, &eff, x, z, &hi)?;
    if s_lo == Ordering::Equal || s_hi == Ordering::Equal || s_lo == s_hi {
        return Err(Error::NoSignChange { x, z });
    }
    loop {
        let width = Float::with_val_round(ep, &hi - &lo, Round::Up).0;
        if width <= target {
            break;
        }
        let mid = Float::with_val(ep, &lo + &hi) / 2u32;
        match certified_sign(cert, &eff, x, z, &mid)? {
            Ordering::Equal => {
                lo = mid.clone();
                hi = mid;
                break;
            }
            s if s == s_lo => lo = mid,
            _ => hi = mid,
        }
    }
    if lo <= *beta || hi >= *gamma {
        return Err(Error::NoSignChange { x, z });
    }
    CertifiedReal::new(lo, hi)
}

/// Enclosure of `ln(kappa) / ln(z / x)` with `kappa = a/c`, or `kappa = 2` when `a = b = c`.
pub fn approx_alpha(cert: &Certifier, coeffs: &EquationCoeffs, x: u64, z: u64, precision_bits: u32) -> Result<CertifiedReal> {
    if x == z {
        return Err(Error::Domain("approximant needs z != x".into()));
    }
    let eff = coeffs.effective();
    let (num, den) = match eff.shape {
        Shape::AllEqual => (2, 1),
        _ => (eff.a, eff.c),
    };
    let ln_kappa = cert.log_ratio(num, den, precision_bits)?;
    ln_kappa.div(&cert.log_ratio(z, x, precision_bits)?)
}
