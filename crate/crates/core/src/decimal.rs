//! Exact decimal <-> rational conversion for configuration values.

use rug::ops::Pow;
use rug::{Integer, Rational};

use crate::error::{Error, Result};

/// Parses `[+-]digits[.digits][e[+-]digits]` into the exact rational it denotes.
pub fn parse_decimal(s: &str) -> Result<Rational> {
    let bad = |msg: &str| Error::Parse {
        line: 0,
        msg: format!("invalid decimal {s:?}: {msg}"),
    };
    let t = s.trim();
    let (neg, body) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = body[i + 1..].parse().map_err(|_| bad("bad exponent"))?;
            (&body[..i], e)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad("no digits"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad("unexpected character"));
    }
    let digits = format!("{int_part}{frac_part}");
    let num: Integer = if digits.is_empty() {
        Integer::new()
    } else {
        digits.parse().map_err(|_| bad("bad digits"))?
    };
    let scale = exp - frac_part.len() as i32;
    let mut q = Rational::from(num);
    let ten = Integer::from(10);
    if scale >= 0 {
        q *= Integer::from(ten.pow(scale as u32));
    } else {
        q /= Integer::from(ten.pow((-scale) as u32));
    }
    if neg {
        q = -q;
    }
    Ok(q)
}

/// Renders a rational whose denominator divides a power of ten exactly;
/// other rationals are rendered as `num/den`.
pub fn format_rational(q: &Rational) -> String {
    let mut den = q.denom().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while den.is_divisible_u(2) {
        den /= 2;
        twos += 1;
    }
    while den.is_divisible_u(5) {
        den /= 5;
        fives += 1;
    }
    if den != 1 {
        return q.to_string();
    }
    let places = twos.max(fives);
    let scaled = Integer::from(q.numer() * Integer::from(Integer::u_pow_u(10, places)) / q.denom());
    if places == 0 {
        return scaled.to_string();
    }
    let neg = scaled < 0;
    let digits = scaled.abs().to_string();
    let places = places as usize;
    let padded = if digits.len() <= places {
        format!("{}{}", "0".repeat(places + 1 - digits.len()), digits)
    } else {
        digits
    };
    let (i, f) = padded.split_at(padded.len() - places);
    format!("{}{i}.{f}", if neg { "-" } else { "" })
}
