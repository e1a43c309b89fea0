//! Lifting an exact-power identity to a floor identity that holds for a
//! whole window of exponents.
//!
//! Given `a X^alpha + b Y^alpha = c Z^alpha` up to the bracket width, a
//! multiplier `n0` is searched so that the floors of `(n0 W)^alpha` satisfy
//! the same linear relation, and the window is then widened to the range
//! where none of the three floors move.

use rayon::prelude::*;
use rug::float::Round;
use rug::{Float, Integer, Rational};

use crate::alpha_solver::{solve_alpha, EquationCoeffs, ExponentWindow, Shape};
use crate::bigfloat::{CertifiedFloor, CertifiedReal, Certifier};
use crate::dimension::r_exponent;
use crate::error::{Error, Result};

/// Default constant in front of the search bound.
pub const DEFAULT_CAP_CONSTANT: u64 = 100;
/// Maximum number of bracket halvings when the window fails certification.
pub const MAX_RETRIES: u32 = 6;
const SCAN_CHUNK: u64 = 64;
const ETA_BITS: u32 = 256;

/// A certified solution of `a X + b Y = c Z` in `PS(tau)` for every `tau` in `window`.
///
/// `big_x, big_y, big_z` follow the original coefficient order; in the
/// swapped case the multiplier-scaled `x` therefore sits in `big_y`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolvabilityWitness {
    pub coeffs: EquationCoeffs,
    pub window: ExponentWindow,
    pub big_x: u64,
    pub big_y: u64,
    pub big_z: u64,
    pub n0: u64,
    /// `floor(W^tau)` for `W = X, Y, Z`, constant across the window.
    pub floors: [Integer; 3],
    pub verified_samples: u64,
    /// The default search bound for this instance; `n0` above it is reported, not rejected.
    pub n0_bound: u64,
    /// Multipliers below `n0` whose floors could not be decided.
    pub skipped: Vec<u64>,
}

impl SolvabilityWitness {
    pub fn triple(&self) -> [u64; 3] {
        [self.big_x, self.big_y, self.big_z]
    }

    /// The member of the triple built from `x`.
    pub fn scaled_x(&self) -> u64 {
        if self.coeffs.case_tag() == crate::alpha_solver::CaseTag::Swapped {
            self.big_y
        } else {
            self.big_x
        }
    }

    pub fn exceeds_bound(&self) -> bool {
        self.n0 > self.n0_bound
    }
}

#[derive(Clone, Debug)]
pub struct LiftConfig {
    pub cert: Certifier,
    pub width_target: Rational,
    /// Explicit search cap; `None` uses `ceil(K (X + Y)^r)`.
    pub n0_cap: Option<u64>,
    pub cap_constant: u64,
    pub epsilon: Rational,
    pub retries: u32,
    pub verify_samples: u64,
}

impl Default for LiftConfig {
    fn default() -> Self {
        Self {
            cert: Certifier::default(),
            width_target: crate::alpha_solver::default_width_target(),
            n0_cap: None,
            cap_constant: DEFAULT_CAP_CONSTANT,
            epsilon: Rational::from((1, 10)),
            retries: MAX_RETRIES,
            verify_samples: 16,
        }
    }
}

/// `a {(nX)^alpha} + b {(nY)^alpha} - c {(nZ)^alpha}` from certified floors.
pub fn delta_from_floors(coeffs: &EquationCoeffs, floors: &[CertifiedFloor; 3]) -> Result<CertifiedReal> {
    if floors.iter().any(|f| !f.decided) {
        return Err(Error::Undecidable("fractional part in delta".into()));
    }
    let [fx, fy, fz] = floors;
    Ok(fx
        .frac()
        .scale_u64(coeffs.a())
        .add(&fy.frac().scale_u64(coeffs.b()))
        .sub(&fz.frac().scale_u64(coeffs.c())))
}

fn checked_mul(n: u64, w: u64) -> Result<u64> {
    n.checked_mul(w).ok_or_else(|| Error::Domain(format!("{n} * {w} overflows")))
}

fn scaled_floors(cert: &Certifier, n: u64, triple: [u64; 3], alpha: &CertifiedReal) -> Result<[CertifiedFloor; 3]> {
    Ok([
        cert.floor_pow(checked_mul(n, triple[0])?, alpha)?,
        cert.floor_pow(checked_mul(n, triple[1])?, alpha)?,
        cert.floor_pow(checked_mul(n, triple[2])?, alpha)?,
    ])
}

/// Enclosure of `delta(n)` for the triple `(X, Y, Z)` in original coefficient order.
pub fn delta(cert: &Certifier, coeffs: &EquationCoeffs, n: u64, triple: [u64; 3], alpha: &CertifiedReal) -> Result<CertifiedReal> {
    if n == 0 {
        return Err(Error::Domain("multiplier must be positive".into()));
    }
    delta_from_floors(coeffs, &scaled_floors(cert, n, triple, alpha)?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct N0Search {
    pub n0: Option<u64>,
    /// Candidates below the hit (or the cap) that could not be decided.
    pub skipped: Vec<u64>,
}

enum Probe {
    Hit,
    Miss,
    Skip,
}

fn probe(cert: &Certifier, coeffs: &EquationCoeffs, n: u64, triple: [u64; 3], alpha: &CertifiedReal) -> Result<Probe> {
    let f = scaled_floors(cert, n, triple, alpha)?;
    if f.iter().any(|f| !f.decided) {
        return Ok(Probe::Skip);
    }
    let small = f.iter().all(CertifiedFloor::frac_below_half);
    Ok(if small && coeffs.holds(&f[0].value, &f[1].value, &f[2].value) {
        Probe::Hit
    } else {
        Probe::Miss
    })
}

/// Smallest `n <= cap` where the floor identity holds and all three
/// fractional parts are certified below one half.
pub fn find_n0(cert: &Certifier, coeffs: &EquationCoeffs, triple: [u64; 3], alpha: &CertifiedReal, cap: u64) -> Result<N0Search> {
    if triple.contains(&0) {
        return Err(Error::Domain("triple entries must be positive".into()));
    }
    let mut skipped = Vec::new();
    let mut start = 1u64;
    while start <= cap {
        let end = start.saturating_add(SCAN_CHUNK - 1).min(cap);
        let results: Vec<Result<Probe>> = (start..=end)
            .into_par_iter()
            .map(|n| probe(cert, coeffs, n, triple, alpha))
            .collect();
        for (n, r) in (start..=end).zip(results) {
            match r? {
                Probe::Hit => {
                    return Ok(N0Search {
                        n0: Some(n),
                        skipped,
                    })
                }
                Probe::Skip => skipped.push(n),
                Probe::Miss => {}
            }
        }
        if end == u64::MAX {
            break;
        }
        start = end + 1;
    }
    Ok(N0Search { n0: None, skipped })
}

/// `min over W of ln(floor(W^alpha) + 1) / ln W - alpha`.
///
/// `W = 1` is skipped since its floor is 1 for every exponent.
pub fn eta(cert: &Certifier, alpha: &CertifiedReal, triple: [u64; 3]) -> Result<CertifiedReal> {
    if triple.contains(&0) || triple.iter().all(|&w| w < 2) {
        return Err(Error::Domain("stability width needs W >= 1 and some W >= 2".into()));
    }
    let found = cert.refine(|p| {
        let p = p.max(ETA_BITS).min(cert.cap_bits());
        let a = alpha.with_precision(p.max(alpha.precision_bits()));
        let mut best: Option<CertifiedReal> = None;
        for &w in triple.iter().filter(|&&w| w >= 2) {
            let f = cert.floor_pow(w, alpha)?;
            if !f.decided {
                return Err(Error::Undecidable(format!("floor({w}^alpha)")));
            }
            let next = CertifiedReal::from_integer(&Integer::from(&f.value + 1u32), p);
            let q = next.ln()?.div(&cert.ln_u64(w, p)?)?.sub(&a);
            best = Some(match best {
                None => q,
                Some(b) => interval_min(&b, &q),
            });
        }
        let best = best.expect("three quotients");
        Ok((*best.lo() > 0u32).then_some(best))
    })?;
    found.ok_or_else(|| Error::Undecidable("positivity of the stability width".into()))
}

fn interval_min(a: &CertifiedReal, b: &CertifiedReal) -> CertifiedReal {
    let lo = if a.lo() < b.lo() { a.lo() } else { b.lo() };
    let hi = if a.hi() < b.hi() { a.hi() } else { b.hi() };
    CertifiedReal::new(lo.clone(), hi.clone()).expect("min of enclosures is ordered")
}

/// `ceil(K (X + Y)^r(beta, gamma, epsilon))`, saturating.
pub fn default_n0_cap(k: u64, x_plus_y: u64, beta: &Rational, gamma: &Rational, epsilon: &Rational) -> Result<u64> {
    let r = r_exponent(beta, gamma, epsilon)?;
    let p = 128;
    let v = Float::with_val(p, x_plus_y).ln() * Float::with_val(p, &r);
    let v = v.exp() * k;
    Ok(match v.to_integer_round(Round::Up) {
        Some((i, _)) => i.to_u64().unwrap_or(u64::MAX),
        None => u64::MAX,
    })
}

/// Base triple in the effective roles, before scaling by `n0`.
fn base_triple(cert: &Certifier, shape: Shape, x: u64, z: u64) -> Result<[u64; 3]> {
    match shape {
        Shape::AllEqual => {
            let l = cert.ceil_ln(x)?;
            let big_x = x.checked_mul(x).and_then(|v| v.checked_mul(l));
            let big_z = z.checked_mul(x).and_then(|v| v.checked_mul(l));
            match (big_x, big_z) {
                (Some(bx), Some(bz)) => Ok([bx, bx + 1, bz]),
                _ => Err(Error::Domain(format!("triple for x = {x} overflows"))),
            }
        }
        Shape::AGtC | Shape::ALtC => Ok([x, 1, z]),
    }
}

/// Reorders an effective triple into the original coefficient order.
fn to_original(coeffs: &EquationCoeffs, t: [u64; 3]) -> [u64; 3] {
    if coeffs.case_tag() == crate::alpha_solver::CaseTag::Swapped {
        [t[1], t[0], t[2]]
    } else {
        t
    }
}

fn window_floors(cert: &Certifier, triple: [u64; 3], iv: &CertifiedReal) -> Result<Option<[Integer; 3]>> {
    let mut out: Vec<Integer> = Vec::with_capacity(3);
    for w in triple {
        let f = cert.floor_pow(w, iv)?;
        if !f.decided {
            return Ok(None);
        }
        out.push(f.value);
    }
    let [fx, fy, fz]: [Integer; 3] = out.try_into().expect("three floors");
    Ok(Some([fx, fy, fz]))
}

/// Full pipeline: bracket `alpha(x, z)`, search `n0`, size the window and certify it.
pub fn make_witness(cfg: &LiftConfig, coeffs: &EquationCoeffs, x: u64, z: u64, beta: &Rational, gamma: &Rational) -> Result<SolvabilityWitness> {
    let cert = &cfg.cert;
    let eff = coeffs.effective();
    let base = to_original(coeffs, base_triple(cert, eff.shape, x, z)?);
    let x_plus_y = base[0].saturating_add(base[1]);
    let n0_bound = default_n0_cap(cfg.cap_constant, x_plus_y, beta, gamma, &cfg.epsilon)?;
    let cap = cfg.n0_cap.unwrap_or(n0_bound);
    let mut width = cfg.width_target.clone();
    let mut last_failure = String::new();
    for _ in 0..=cfg.retries {
        let alpha = solve_alpha(cert, coeffs, x, z, beta, gamma, &width)?;
        let search = find_n0(cert, coeffs, base, &alpha, cap)?;
        let n0 = search.n0.ok_or(Error::N0NotFound { cap })?;
        let triple = [
            checked_mul(n0, base[0])?,
            checked_mul(n0, base[1])?,
            checked_mul(n0, base[2])?,
        ];
        let ell = eta(cert, &alpha, triple)?;
        let window = ExponentWindow::new(x, z, alpha, ell, beta.clone(), gamma.clone())?;
        match window_floors(cert, triple, &window.interval())? {
            Some(floors) if coeffs.holds(&floors[0], &floors[1], &floors[2]) => {
                let w = SolvabilityWitness {
                    coeffs: *coeffs,
                    window,
                    big_x: triple[0],
                    big_y: triple[1],
                    big_z: triple[2],
                    n0,
                    floors,
                    verified_samples: cfg.verify_samples,
                    n0_bound,
                    skipped: search.skipped,
                };
                let v = verify(cert, &w, cfg.verify_samples)?;
                if v.passed {
                    return Ok(w);
                }
                last_failure = v.failures.join("; ");
            }
            Some(_) => last_failure = "floor identity fails on the window".into(),
            None => last_failure = "window floors undecided".into(),
        }
        width /= 2u32;
    }
    Err(Error::Certification(format!(
        "(x, z) = ({x}, {z}) after {} retries: {last_failure}",
        cfg.retries
    )))
}

/// Outcome of re-checking a witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub passed: bool,
    pub checked_points: u64,
    pub failures: Vec<String>,
}

/// The `samples + 2` exponents `lo + i (hi - lo) / (samples + 1)`, endpoints included.
pub fn sample_points(window: &ExponentWindow, samples: u64) -> Vec<Float> {
    let p = window.lo().prec().max(window.hi().prec()) + 64;
    let span = Float::with_val(p, window.hi() - window.lo());
    let steps = samples + 1;
    (0..=steps)
        .map(|i| {
            if i == 0 {
                window.lo().clone()
            } else if i == steps {
                window.hi().clone()
            } else {
                let t = Float::with_val(p, &span * i) / steps;
                Float::with_val(p, window.lo() + &t)
            }
        })
        .collect()
}

/// Checks distinctness, `X >= x`, the identity at equispaced exponents and
/// the whole-window certificate.
pub fn verify(cert: &Certifier, w: &SolvabilityWitness, samples: u64) -> Result<Verification> {
    let mut failures = Vec::new();
    let t = w.triple();
    if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
        failures.push(format!("triple {t:?} is not pairwise distinct"));
    }
    if w.scaled_x() < w.window.x {
        failures.push(format!("scaled x = {} is below x = {}", w.scaled_x(), w.window.x));
    }
    if !w.coeffs.holds(&w.floors[0], &w.floors[1], &w.floors[2]) {
        failures.push("stored floors violate the identity".into());
    }
    let points = sample_points(&w.window, samples);
    let results: Vec<Result<Option<String>>> = points
        .par_iter()
        .map(|tau| {
            let pt = CertifiedReal::point(tau.clone());
            for (i, &base) in t.iter().enumerate() {
                let f = cert.floor_pow(base, &pt)?;
                if !f.decided {
                    return Ok(Some(format!("floor({base}^tau) undecided at tau = {}", tau.to_string_radix(10, Some(25)))));
                }
                if f.value != w.floors[i] {
                    return Ok(Some(format!("floor({base}^tau) = {} moves at tau = {}", f.value, tau.to_string_radix(10, Some(25)))));
                }
            }
            Ok(None)
        })
        .collect();
    for r in results {
        if let Some(msg) = r? {
            failures.push(msg);
        }
    }
    match window_floors(cert, t, &w.window.interval())? {
        Some(f) if f == w.floors => {}
        Some(_) => failures.push("whole-window floors differ from the stored floors".into()),
        None => failures.push("whole-window floors undecided".into()),
    }
    Ok(Verification {
        passed: failures.is_empty(),
        checked_points: points.len() as u64,
        failures,
    })
}

pub fn verify_witness(cert: &Certifier, w: &SolvabilityWitness, samples: u64) -> bool {
    verify(cert, w, samples).map(|v| v.passed).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha_solver::interval_j;
    use rug::ops::Pow;

    fn q(s: &str) -> Rational {
        crate::decimal::parse_decimal(s).unwrap()
    }

    fn pt(s: &str) -> CertifiedReal {
        CertifiedReal::from_rational(&q(s), 256)
    }

    // 512-bit root of a X^u + b Y^u = c Z^u, bisected directly on the triple.
    fn oracle_alpha(k: [u64; 3], t: [u64; 3], lo: f64, hi: f64) -> Float {
        let p = 512;
        let f = |u: &Float| {
            let pw = |w: u64| Float::with_val(p, w).pow(u);
            pw(t[0]) * k[0] + pw(t[1]) * k[1] - pw(t[2]) * k[2]
        };
        let (mut lo, mut hi) = (Float::with_val(p, lo), Float::with_val(p, hi));
        let s_lo = f(&lo).is_sign_positive();
        for _ in 0..400 {
            let mid = Float::with_val(p, &lo + &hi) / 2u32;
            if f(&mid).is_sign_positive() == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn delta_examples() {
        let c = Certifier::default();
        let k = EquationCoeffs::new(1, 1, 1).unwrap();
        // integer exponent: every fractional part vanishes
        let d = delta(&c, &k, 3, [2, 3, 4], &pt("2")).unwrap();
        assert!(d.is_degenerate() && d.lo().is_zero());
        let f = |v: &str| {
            let r = pt(v);
            CertifiedFloor {
                value: Integer::from(7),
                frac_lo: r.lo().clone(),
                frac_hi: r.hi().clone(),
                decided: true,
                precision_bits: 256,
            }
        };
        let d = delta_from_floors(&k, &[f("0.3"), f("0.3"), f("0.4")]).unwrap();
        assert!(d.contains_rational(&q("0.2")));
        assert!(d.width() < 1e-60f64);
    }

    #[test]
    fn delta_matches_oracle() {
        let c = Certifier::default();
        let k = EquationCoeffs::new(3, 1, 2).unwrap();
        let a = pt("2.25");
        let d = delta(&c, &k, 7, [5, 11, 13], &a).unwrap();
        let p = 512;
        let e = Float::with_val(p, 9) / 4u32;
        let fr = |w: u64| {
            let v = Float::with_val(p, w * 7).pow(&e);
            let fl = v.clone().floor();
            v - fl
        };
        let want = fr(5) * 3u32 + fr(11) - fr(13) * 2u32;
        assert!(d.contains(&want));
    }

    #[test]
    fn n0_trivial_cases() {
        let c = Certifier::default();
        let k = EquationCoeffs::new(1, 1, 1).unwrap();
        // 3^2 + 4^2 = 5^2 at exponent 2: every floor is exact
        let s = find_n0(&c, &k, [3, 4, 5], &pt("2"), 10).unwrap();
        assert_eq!(s.n0, Some(1));
        let s = find_n0(&c, &k, [3, 4, 5], &pt("2"), 0).unwrap();
        assert_eq!(s.n0, None);
    }

    #[test]
    fn n0_matches_scan_x20() {
        let c = Certifier::default();
        let k = EquationCoeffs::new(1, 1, 1).unwrap();
        let (beta, gamma) = (q("2.1"), q("2.4"));
        let j = interval_j(&c, &k, 20, &beta, &gamma).unwrap();
        let z = j.zs[0];
        let t = [1200, 1201, z * 60];
        let alpha = solve_alpha(&c, &k, 20, z, &beta, &gamma, &crate::alpha_solver::default_width_target()).unwrap();
        let found = find_n0(&c, &k, t, &alpha, 100_000).unwrap();

        let a = oracle_alpha([1, 1, 1], t, 2.1, 2.4);
        assert!(alpha.contains(&a));
        let p = 512;
        let hit = (1u64..100_000).find(|&n| {
            let parts: Vec<(Integer, Float)> = t
                .iter()
                .map(|&w| {
                    let v = Float::with_val(p, n * w).pow(&a);
                    let fl = v.clone().floor();
                    (fl.to_integer().unwrap(), v - fl)
                })
                .collect();
            parts.iter().all(|(_, f)| *f < 0.5f64) && Integer::from(&parts[0].0 + &parts[1].0) == parts[2].0
        });
        assert!(hit.is_some());
        assert_eq!(found.n0, hit);
    }

    #[test]
    fn eta_example() {
        let c = Certifier::default();
        let e = eta(&c, &pt("2.5"), [2, 2, 2]).unwrap();
        let p = 512;
        let want = Float::with_val(p, 6).log2() - 2.5f64;
        assert!(e.contains(&want));
        assert!((want.to_f64() - 0.084_962).abs() < 1e-6);
        assert!(matches!(eta(&c, &pt("2.5"), [0, 2, 3]), Err(Error::Domain(_))));
        assert!(matches!(eta(&c, &pt("2.5"), [1, 1, 1]), Err(Error::Domain(_))));
        let with_one = eta(&c, &pt("2.5"), [1, 2, 3]).unwrap();
        let without = eta(&c, &pt("2.5"), [2, 2, 3]).unwrap();
        assert_eq!(with_one.lo(), without.lo());
    }

    #[test]
    fn eta_takes_the_minimum() {
        let c = Certifier::default();
        let a = pt("2.5");
        let one = |w| eta(&c, &a, [w, w, w]).unwrap();
        let all = eta(&c, &a, [2, 3, 10]).unwrap();
        let m = [one(2), one(3), one(10)]
            .into_iter()
            .min_by(|u, v| u.mid().partial_cmp(&v.mid()).unwrap())
            .unwrap();
        assert_eq!(all.lo(), m.lo());
    }

    #[test]
    fn default_cap_formula() {
        let cap = default_n0_cap(100, 2401, &q("2.2"), &q("2.3"), &q("0.1")).unwrap();
        let r = 529.0 / 289.0 + 0.1;
        let want = 100.0 * 2401f64.powf(r);
        assert!((cap as f64 - want).abs() <= 1.0 + want * 1e-12, "{cap} {want}");
    }

    fn check_witness(a: u64, b: u64, cc: u64, x: u64, beta: &str, gamma: &str) -> SolvabilityWitness {
        let cfg = LiftConfig::default();
        let k = EquationCoeffs::new(a, b, cc).unwrap();
        let (beta, gamma) = (q(beta), q(gamma));
        let j = interval_j(&cfg.cert, &k, x, &beta, &gamma).unwrap();
        let z = *j.zs.first().expect("non-empty J");
        let w = make_witness(&cfg, &k, x, z, &beta, &gamma).unwrap();
        assert!(verify_witness(&cfg.cert, &w, 64));
        assert!(verify_witness(&cfg.cert, &w, 0));
        assert!(w.scaled_x() >= x);
        w
    }

    #[test]
    fn witness_ap() {
        let w = check_witness(1, 1, 2, 100, "2.2", "2.3");
        assert_eq!(Integer::from(&w.floors[0] + &w.floors[1]), Integer::from(&w.floors[2] * 2u32));
    }

    #[test]
    fn witness_all_equal_x20() {
        let w = check_witness(1, 1, 1, 20, "2.1", "2.4");
        assert!(w.big_x >= 20 && w.big_x < w.big_y && w.big_y < w.big_z);
    }

    #[test]
    fn witness_a_gt_c() {
        check_witness(3, 1, 1, 100, "2.2", "2.3");
    }

    #[test]
    fn witness_swapped_uses_original_roles() {
        let w = check_witness(2, 5, 2, 100, "2.2", "2.3");
        let k = w.coeffs;
        assert!(k.holds(&w.floors[0], &w.floors[1], &w.floors[2]));
        assert_eq!(w.big_x, w.n0);
    }

    #[test]
    fn widened_window_breaks() {
        let w = check_witness(1, 1, 2, 100, "2.2", "2.3");
        let wide = SolvabilityWitness {
            window: w.window.inflated(10),
            ..w.clone()
        };
        assert!(!verify_witness(&Certifier::default(), &wide, 256));
    }
}
