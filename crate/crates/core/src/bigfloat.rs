//! Adaptive-precision interval arithmetic on top of MPFR.
//!
//! Every primitive rounds its lower endpoint toward -inf and its upper
//! endpoint toward +inf, so a [`CertifiedReal`] always contains the exact
//! value it stands for. [`Certifier`] carries the precision schedule and
//! implements the queries the rest of the crate needs: enclosures of
//! `n^t`, certified floors and fractional parts, and logarithms of ratios.

use std::cmp::Ordering;
use std::fmt;

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

pub const DEFAULT_START_BITS: u32 = 64;
pub const DEFAULT_CAP_BITS: u32 = 4096;

/// A closed interval `[lo, hi]` of MPFR floats enclosing an exact real.
#[derive(Clone, PartialEq)]
pub struct CertifiedReal {
    lo: Float,
    hi: Float,
    precision_bits: u32,
}

impl fmt::Debug for CertifiedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]@{}",
            decimal_down(&self.lo, 25),
            decimal_up(&self.hi, 25),
            self.precision_bits
        )
    }
}

macro_rules! rounded {
    ($prec:expr, $val:expr, $round:expr) => {
        Float::with_val_round($prec, $val, $round).0
    };
}

impl CertifiedReal {
    pub fn new(lo: Float, hi: Float) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain("non-finite interval endpoint".into()));
        }
        if lo > hi {
            return Err(Error::Domain(format!(
                "interval endpoints out of order: {} > {}",
                decimal_down(&lo, 20),
                decimal_up(&hi, 20)
            )));
        }
        let precision_bits = lo.prec().max(hi.prec());
        Ok(Self {
            lo,
            hi,
            precision_bits,
        })
    }

    /// Degenerate interval at an exactly representable value.
    pub fn point(v: Float) -> Self {
        let precision_bits = v.prec();
        Self {
            lo: v.clone(),
            hi: v,
            precision_bits,
        }
    }

    pub fn from_u64(n: u64, prec: u32) -> Self {
        Self {
            lo: rounded!(prec, n, Round::Down),
            hi: rounded!(prec, n, Round::Up),
            precision_bits: prec,
        }
    }

    pub fn from_integer(n: &Integer, prec: u32) -> Self {
        Self {
            lo: rounded!(prec, n, Round::Down),
            hi: rounded!(prec, n, Round::Up),
            precision_bits: prec,
        }
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        Self {
            lo: rounded!(prec, q, Round::Down),
            hi: rounded!(prec, q, Round::Up),
            precision_bits: prec,
        }
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// Upper bound on `hi - lo`.
    pub fn width(&self) -> Float {
        rounded!(self.precision_bits, &self.hi - &self.lo, Round::Up)
    }

    pub fn mid(&self) -> Float {
        let prec = self.precision_bits + 2;
        let s = rounded!(prec, &self.lo + &self.hi, Round::Nearest);
        s / 2u32
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid().to_f64()
    }

    pub fn contains(&self, v: &Float) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn contains_rational(&self, q: &Rational) -> bool {
        self.lo <= *q && self.hi >= *q
    }

    /// `Some(sign)` when the sign of every enclosed value is the same.
    pub fn sign(&self) -> Option<Ordering> {
        if self.lo.is_sign_positive() && !self.lo.is_zero() {
            Some(Ordering::Greater)
        } else if self.hi.is_sign_negative() && !self.hi.is_zero() {
            Some(Ordering::Less)
        } else if self.lo.is_zero() && self.hi.is_zero() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Same interval carried at a higher working precision.
    pub fn with_precision(&self, prec: u32) -> Self {
        let prec = prec.max(self.lo.prec()).max(self.hi.prec());
        Self {
            lo: rounded!(prec, &self.lo, Round::Down),
            hi: rounded!(prec, &self.hi, Round::Up),
            precision_bits: prec,
        }
    }

    fn prec_with(&self, other: &Self) -> u32 {
        self.precision_bits.max(other.precision_bits)
    }

    pub fn add(&self, other: &Self) -> Self {
        let p = self.prec_with(other);
        Self {
            lo: rounded!(p, &self.lo + &other.lo, Round::Down),
            hi: rounded!(p, &self.hi + &other.hi, Round::Up),
            precision_bits: p,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let p = self.prec_with(other);
        Self {
            lo: rounded!(p, &self.lo - &other.hi, Round::Down),
            hi: rounded!(p, &self.hi - &other.lo, Round::Up),
            precision_bits: p,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            lo: Float::with_val(self.hi.prec(), -&self.hi),
            hi: Float::with_val(self.lo.prec(), -&self.lo),
            precision_bits: self.precision_bits,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let p = self.prec_with(other);
        let pairs = [
            (&self.lo, &other.lo),
            (&self.lo, &other.hi),
            (&self.hi, &other.lo),
            (&self.hi, &other.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (u, v) in pairs {
            let d = rounded!(p, u * v, Round::Down);
            let h = rounded!(p, u * v, Round::Up);
            if lo.as_ref().map_or(true, |l| d < *l) {
                lo = Some(d);
            }
            if hi.as_ref().map_or(true, |x| h > *x) {
                hi = Some(h);
            }
        }
        Self {
            lo: lo.expect("four products"),
            hi: hi.expect("four products"),
            precision_bits: p,
        }
    }

    /// Multiplication by an exact non-negative integer.
    pub fn scale_u64(&self, k: u64) -> Self {
        let p = self.precision_bits;
        Self {
            lo: rounded!(p, &self.lo * k, Round::Down),
            hi: rounded!(p, &self.hi * k, Round::Up),
            precision_bits: p,
        }
    }

    pub fn recip(&self) -> Result<Self> {
        if self.sign().map_or(true, |s| s == Ordering::Equal) {
            return Err(Error::Domain("reciprocal of an interval containing 0".into()));
        }
        let p = self.precision_bits;
        Ok(Self {
            lo: rounded!(p, 1u32 / &self.hi, Round::Down),
            hi: rounded!(p, 1u32 / &self.lo, Round::Up),
            precision_bits: p,
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.recip()?))
    }

    /// Natural logarithm; requires `lo > 0`.
    pub fn ln(&self) -> Result<Self> {
        if self.sign() != Some(Ordering::Greater) {
            return Err(Error::Domain("logarithm of a non-positive interval".into()));
        }
        let p = self.precision_bits;
        Ok(Self {
            lo: rounded!(p, self.lo.ln_ref(), Round::Down),
            hi: rounded!(p, self.hi.ln_ref(), Round::Up),
            precision_bits: p,
        })
    }

    pub fn exp(&self) -> Self {
        let p = self.precision_bits;
        Self {
            lo: rounded!(p, self.lo.exp_ref(), Round::Down),
            hi: rounded!(p, self.hi.exp_ref(), Round::Up),
            precision_bits: p,
        }
    }

    /// `self^exponent` for a positive base interval, as `exp(exponent * ln self)`.
    pub fn powr(&self, exponent: &Self) -> Result<Self> {
        Ok(exponent.mul(&self.ln()?).exp())
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Self) -> Self {
        let p = self.prec_with(other);
        let lo = if self.lo <= other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi >= other.hi { &self.hi } else { &other.hi };
        Self {
            lo: rounded!(p, lo, Round::Down),
            hi: rounded!(p, hi, Round::Up),
            precision_bits: p,
        }
    }

    /// The common floor of all enclosed values, if there is one.
    pub fn unique_floor(&self) -> Option<Integer> {
        let (fl, _) = self.lo.to_integer_round(Round::Down)?;
        let next = Integer::from(&fl + 1u32);
        if self.hi < next {
            Some(fl)
        } else {
            None
        }
    }

    /// The common ceiling of all enclosed values, if there is one.
    pub fn unique_ceil(&self) -> Option<Integer> {
        let (ce, _) = self.hi.to_integer_round(Round::Up)?;
        let prev = Integer::from(&ce - 1u32);
        if self.lo > prev {
            Some(ce)
        } else {
            None
        }
    }

    /// Outward-rounded decimal rendering of both endpoints.
    pub fn to_decimal(&self, digits: usize) -> (String, String) {
        (decimal_down(&self.lo, digits), decimal_up(&self.hi, digits))
    }
}

pub fn decimal_down(v: &Float, digits: usize) -> String {
    v.to_string_radix_round(10, Some(digits), Round::Down)
}

pub fn decimal_up(v: &Float, digits: usize) -> String {
    v.to_string_radix_round(10, Some(digits), Round::Up)
}

/// Certified `⌊base^t⌋` for every `t` in a queried exponent interval.
#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedFloor {
    pub value: Integer,
    pub frac_lo: Float,
    pub frac_hi: Float,
    pub decided: bool,
    pub precision_bits: u32,
}

impl CertifiedFloor {
    /// Enclosure of the fractional part.
    pub fn frac(&self) -> CertifiedReal {
        CertifiedReal {
            lo: self.frac_lo.clone(),
            hi: self.frac_hi.clone(),
            precision_bits: self.precision_bits,
        }
    }

    /// Certified `{base^t} < 1/2` over the whole query.
    pub fn frac_below_half(&self) -> bool {
        self.decided && self.frac_hi < 0.5f64
    }

    fn exact(value: Integer) -> Self {
        Self {
            value,
            frac_lo: Float::new(DEFAULT_START_BITS),
            frac_hi: Float::new(DEFAULT_START_BITS),
            decided: true,
            precision_bits: DEFAULT_START_BITS,
        }
    }

    fn from_enclosure(enc: &CertifiedReal) -> Option<Self> {
        let value = enc.unique_floor()?;
        let p = enc.precision_bits;
        let frac_lo = rounded!(p, &enc.lo - &value, Round::Down);
        let mut frac_hi = rounded!(p, &enc.hi - &value, Round::Up);
        if frac_hi > 1u32 {
            frac_hi = Float::with_val(p, 1u32);
        }
        Some(Self {
            value,
            frac_lo,
            frac_hi,
            decided: true,
            precision_bits: p,
        })
    }
}

/// Precision schedule: start at `start_bits`, double up to `cap_bits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Certifier {
    start_bits: u32,
    cap_bits: u32,
}

impl Default for Certifier {
    fn default() -> Self {
        Self {
            start_bits: DEFAULT_START_BITS,
            cap_bits: DEFAULT_CAP_BITS,
        }
    }
}

impl Certifier {
    pub fn new(start_bits: u32, cap_bits: u32) -> Result<Self> {
        if start_bits < 2 || start_bits > cap_bits {
            return Err(Error::Domain(format!(
                "invalid precision schedule {start_bits}..{cap_bits}"
            )));
        }
        Ok(Self {
            start_bits,
            cap_bits,
        })
    }

    pub fn with_cap(cap_bits: u32) -> Result<Self> {
        Self::new(DEFAULT_START_BITS.min(cap_bits), cap_bits)
    }

    pub fn start_bits(&self) -> u32 {
        self.start_bits
    }

    pub fn cap_bits(&self) -> u32 {
        self.cap_bits
    }

    /// The doubling schedule `start, 2*start, ...`, the last step clamped to the cap.
    pub fn steps(&self) -> impl Iterator<Item = u32> {
        let cap = self.cap_bits;
        let mut next = Some(self.start_bits);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur >= cap {
                None
            } else {
                Some(cur.saturating_mul(2).min(cap))
            };
            Some(cur)
        })
    }

    fn check(&self, bits: u32) -> Result<()> {
        if bits > self.cap_bits {
            Err(Error::PrecisionCap {
                requested: bits,
                cap: self.cap_bits,
            })
        } else {
            Ok(())
        }
    }

    /// Runs `attempt` along the precision schedule until it yields a value.
    pub fn refine<T>(&self, mut attempt: impl FnMut(u32) -> Result<Option<T>>) -> Result<Option<T>> {
        for p in self.steps() {
            if let Some(v) = attempt(p)? {
                return Ok(Some(v));
            }
        }
        Ok(None)
    }

    /// Enclosure of `{ base^t : t in exponent }`.
    pub fn pow_enclose(&self, base: u64, exponent: &CertifiedReal, precision_bits: u32) -> Result<CertifiedReal> {
        self.check(precision_bits)?;
        if base == 0 {
            return Err(Error::Domain("pow_enclose needs base >= 1".into()));
        }
        if exponent.lo.is_sign_negative() || exponent.lo.is_zero() {
            return Err(Error::Domain("pow_enclose needs a positive exponent".into()));
        }
        let p = precision_bits;
        if base == 1 {
            return Ok(CertifiedReal::from_u64(1, p));
        }
        if let Some(k) = exact_small_exponent(exponent) {
            let v = Integer::from(base).pow(k);
            return Ok(CertifiedReal::from_integer(&v, p));
        }
        // base >= 2: t -> base^t is increasing
        let b = Float::with_val(64.max(p), base);
        let lo = rounded!(p, (&b).pow(&exponent.lo), Round::Down);
        let hi = rounded!(p, (&b).pow(&exponent.hi), Round::Up);
        Ok(CertifiedReal {
            lo,
            hi,
            precision_bits: p,
        })
    }

    /// Certified floor of `base^t` over the exponent interval.
    ///
    /// Returns `decided = false` when the cap is reached or when the two
    /// endpoint floors are certified to differ.
    pub fn floor_pow(&self, base: u64, exponent: &CertifiedReal) -> Result<CertifiedFloor> {
        if base == 0 {
            return Err(Error::Domain("floor_pow needs base >= 1".into()));
        }
        if base == 1 {
            return Ok(CertifiedFloor::exact(Integer::from(1)));
        }
        if let Some(k) = exact_small_exponent(exponent) {
            return Ok(CertifiedFloor::exact(Integer::from(base).pow(k)));
        }
        let ends = (
            CertifiedReal::point(exponent.lo.clone()),
            CertifiedReal::point(exponent.hi.clone()),
        );
        let mut last = None;
        for p in self.steps() {
            let enc = self.pow_enclose(base, exponent, p)?;
            if let Some(f) = CertifiedFloor::from_enclosure(&enc) {
                return Ok(f);
            }
            if !exponent.is_degenerate() {
                let lo = self.pow_enclose(base, &ends.0, p)?.unique_floor();
                let hi = self.pow_enclose(base, &ends.1, p)?.unique_floor();
                if let (Some(l), Some(h)) = (lo, hi) {
                    if l != h {
                        last = Some(enc);
                        break;
                    }
                }
            }
            last = Some(enc);
        }
        let enc = last.expect("schedule has at least one step");
        let value = enc
            .lo
            .to_integer_round(Round::Down)
            .map(|(i, _)| i)
            .unwrap_or_default();
        Ok(CertifiedFloor {
            frac_lo: Float::new(enc.precision_bits),
            frac_hi: Float::with_val(enc.precision_bits, 1u32),
            value,
            decided: false,
            precision_bits: enc.precision_bits,
        })
    }

    /// Enclosure of the natural logarithm of `num / den`.
    pub fn log_ratio(&self, num: u64, den: u64, precision_bits: u32) -> Result<CertifiedReal> {
        self.check(precision_bits)?;
        if num == 0 || den == 0 {
            return Err(Error::Domain("log_ratio needs positive arguments".into()));
        }
        let p = precision_bits;
        if num == den {
            return Ok(CertifiedReal::from_u64(0, p));
        }
        let n = CertifiedReal::from_u64(num, p.max(64)).ln()?;
        let d = CertifiedReal::from_u64(den, p.max(64)).ln()?;
        let r = n.sub(&d);
        Ok(CertifiedReal {
            lo: rounded!(p, &r.lo, Round::Down),
            hi: rounded!(p, &r.hi, Round::Up),
            precision_bits: p,
        })
    }

    /// Natural logarithm of a positive integer.
    pub fn ln_u64(&self, x: u64, precision_bits: u32) -> Result<CertifiedReal> {
        self.log_ratio(x, 1, precision_bits)
    }

    /// `⌈ln x⌉` for an integer `x >= 1`.
    pub fn ceil_ln(&self, x: u64) -> Result<u64> {
        if x == 0 {
            return Err(Error::Domain("ceil_ln(0)".into()));
        }
        if x == 1 {
            return Ok(0);
        }
        let found = self.refine(|p| Ok(self.ln_u64(x, p)?.unique_ceil()))?;
        found
            .and_then(|c| c.to_u64())
            .ok_or_else(|| Error::Undecidable(format!("ceil(ln {x})")))
    }
}

/// A degenerate exponent sitting exactly on a small non-negative integer.
fn exact_small_exponent(e: &CertifiedReal) -> Option<u32> {
    if !e.is_degenerate() || !e.lo.is_integer() {
        return None;
    }
    e.lo.to_u32_saturating().filter(|&k| k < 1 << 16 && e.lo == k)
}
