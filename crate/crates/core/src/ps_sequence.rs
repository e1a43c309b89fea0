//! Terms of `PS(alpha) = { floor(n^alpha) : n >= 1 }` with certified floors.

use rug::float::Round;
use rug::{Float, Integer};

use crate::bigfloat::{CertifiedReal, Certifier};
use crate::error::{Error, Result};

/// The term `floor(index^alpha)` together with an enclosure of `{index^alpha}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PsTerm {
    pub index: u64,
    pub value: Integer,
    pub frac: CertifiedReal,
}

fn check_alpha(alpha: &CertifiedReal) -> Result<()> {
    if *alpha.lo() <= 1u32 {
        return Err(Error::Domain("Piatetski-Shapiro exponent must exceed 1".into()));
    }
    Ok(())
}

pub fn ps_term(cert: &Certifier, n: u64, alpha: &CertifiedReal) -> Result<PsTerm> {
    if n == 0 {
        return Err(Error::Domain("sequence index starts at 1".into()));
    }
    check_alpha(alpha)?;
    let f = cert.floor_pow(n, alpha)?;
    if !f.decided {
        return Err(Error::Undecidable(format!("floor({n}^alpha)")));
    }
    Ok(PsTerm {
        index: n,
        frac: f.frac(),
        value: f.value,
    })
}

/// Enclosure of `m^(1/alpha)` for `m >= 1`.
fn inverse_power(m: u64, alpha: &CertifiedReal, prec: u32) -> Result<CertifiedReal> {
    let alpha = alpha.with_precision(prec);
    CertifiedReal::from_u64(m, prec.max(64)).powr(&alpha.recip()?)
}

/// All terms with `lo <= value <= hi`, ascending.
pub fn ps_members_in_range(cert: &Certifier, alpha: &CertifiedReal, lo: u64, hi: u64) -> Result<Vec<PsTerm>> {
    check_alpha(alpha)?;
    if lo > hi {
        return Err(Error::Domain(format!("empty range {lo}..{hi}")));
    }
    let p = cert.start_bits().max(128).min(cert.cap_bits());
    let first = if lo <= 1 {
        1
    } else {
        let r = inverse_power(lo, alpha, p)?;
        r.lo().to_integer_round(Round::Down).map_or(1, |(i, _)| i.to_u64().unwrap_or(u64::MAX).max(1))
    };
    let last = {
        let r = inverse_power(hi.saturating_add(1), alpha, p)?;
        r.hi()
            .to_integer_round(Round::Up)
            .and_then(|(i, _)| i.to_u64())
            .ok_or_else(|| Error::Domain("range too large".into()))?
    };
    let mut out: Vec<PsTerm> = Vec::new();
    for n in first..=last {
        let t = ps_term(cert, n, alpha)?;
        if t.value < lo {
            continue;
        }
        if t.value > hi {
            break;
        }
        if out.last().map_or(true, |prev| prev.value < t.value) {
            out.push(t);
        }
    }
    Ok(out)
}

/// `Some(n)` with `floor(n^alpha) = m` if `m` is a term, `None` otherwise.
///
/// Candidates are the integers adjacent to the enclosure of `m^(1/alpha)`,
/// so only one or two terms are evaluated. `alpha` must be a single point.
pub fn is_member(cert: &Certifier, m: u64, alpha: &CertifiedReal) -> Result<Option<u64>> {
    check_alpha(alpha)?;
    if m == 0 {
        return Err(Error::Domain("membership is defined for m >= 1".into()));
    }
    if !alpha.is_degenerate() {
        return Err(Error::Domain("membership needs a single exponent, not a window".into()));
    }
    if m == 1 {
        return Ok(Some(1));
    }
    let root = cert
        .refine(|p| {
            let r = inverse_power(m, alpha, p)?;
            // at most two integers can sit next to a tight enclosure
            Ok((r.width() < Float::with_val(p, 0.5)).then_some(r))
        })?
        .ok_or_else(|| Error::Undecidable(format!("{m}^(1/alpha)")))?;
    let lo = root.lo().to_integer_round(Round::Up).map(|(i, _)| i);
    let hi = root.hi().to_integer_round(Round::Up).map(|(i, _)| i);
    let mut candidates: Vec<u64> = [lo, hi].into_iter().flatten().filter_map(|i| i.to_u64()).collect();
    candidates.dedup();
    for n in candidates.into_iter().filter(|&n| n >= 1) {
        let t = ps_term(cert, n, alpha)?;
        if t.value == m {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Rational;

    fn alpha(s: &str) -> CertifiedReal {
        let q: Rational = s.parse().unwrap();
        CertifiedReal::from_rational(&q, 128)
    }

    fn pt(v: f64) -> CertifiedReal {
        CertifiedReal::point(Float::with_val(64, v))
    }

    #[test]
    fn term_examples() {
        let c = Certifier::default();
        assert_eq!(ps_term(&c, 1, &alpha("37/10")).unwrap().value, 1);
        assert_eq!(ps_term(&c, 2, &pt(2.5)).unwrap().value, 5);
        assert_eq!(ps_term(&c, 10, &pt(2.5)).unwrap().value, 316);
    }

    #[test]
    fn rejects_small_exponent() {
        let c = Certifier::default();
        assert!(matches!(ps_term(&c, 3, &pt(0.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn range_examples() {
        let c = Certifier::default();
        let a = pt(2.5);
        let v: Vec<u64> = ps_members_in_range(&c, &a, 1, 10)
            .unwrap()
            .iter()
            .map(|t| t.value.to_u64().unwrap())
            .collect();
        assert_eq!(v, vec![1, 5]);
        assert!(ps_members_in_range(&c, &a, 0, 0).unwrap().is_empty());
        let w: Vec<u64> = ps_members_in_range(&c, &a, 310, 320)
            .unwrap()
            .iter()
            .map(|t| t.index)
            .collect();
        assert_eq!(w, vec![10]);
    }

    #[test]
    fn membership_examples() {
        let c = Certifier::default();
        let a = pt(2.5);
        assert_eq!(is_member(&c, 1, &a).unwrap(), Some(1));
        assert_eq!(is_member(&c, 316, &a).unwrap(), Some(10));
        assert_eq!(is_member(&c, 6, &a).unwrap(), None);
        assert_eq!(is_member(&c, 5, &a).unwrap(), Some(2));
        assert_eq!(is_member(&c, 15, &a).unwrap(), Some(3));
    }

    #[test]
    fn membership_needs_point_exponent() {
        let c = Certifier::default();
        let w = CertifiedReal::new(Float::with_val(64, 2.5), Float::with_val(64, 2.6)).unwrap();
        assert!(is_member(&c, 5, &w).is_err());
    }
}
