//! Command-line front end.
//!
//! Every subcommand writes either aligned human-readable text or, with
//! `--format machine`, one JSON object per line with a fixed field order.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use rug::float::Round;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::alpha_solver::{interval_j, CaseTag, EquationCoeffs, ExponentWindow};
use crate::bigfloat::{decimal_down, decimal_up, CertifiedReal, Certifier, DEFAULT_CAP_BITS};
use crate::decimal::{format_rational, parse_decimal};
use crate::dimension::{
    cantor_lower_bound, dimension_bound, q_exponent, r_exponent, refine_levels, theorem1_bound, CantorLevel, RefineParams,
    DEFAULT_U_CAP,
};
use crate::discrepancy::{discrepancy_1d, discrepancy_2d_with_limit, etk_rhs, parse_points, Discrepancy2d, DEFAULT_EXACT_LIMIT};
use crate::error::{Error, Result};
use crate::lifter::{make_witness, verify, LiftConfig, SolvabilityWitness, DEFAULT_CAP_CONSTANT};

pub const EXIT_USAGE: i32 = 64;
const ALPHA_DIGITS: usize = 30;

#[derive(Parser, Debug)]
#[command(name = "pscert", version, about = "Certified solutions of ax + by = cz in Piatetski-Shapiro sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Largest working precision in bits.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP_BITS)]
    precision_cap: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Machine,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build certified solution witnesses over a range of x.
    Witness(WitnessArgs),
    /// Witnesses for x + y = 2z, printed as three-term progressions.
    Ap3(Ap3Args),
    /// Closed-form dimension bounds and finite-prefix Cantor quotients.
    Dimension(DimensionArgs),
    /// Nested levels of witness windows.
    Cantor(CantorArgs),
    /// Discrepancy and Erdős–Turán–Koksma statistics of a point file.
    Discrepancy(DiscrepancyArgs),
    /// Re-verify witness records produced with `--format machine`.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
struct CoeffArgs {
    #[arg(short = 'a')]
    a: u64,
    #[arg(short = 'b')]
    b: u64,
    #[arg(short = 'c')]
    c: u64,
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    #[arg(long)]
    beta: String,
    #[arg(long)]
    gamma: String,
    /// A single x.
    #[arg(long, conflicts_with = "x_range")]
    x: Option<u64>,
    /// Inclusive range `lo:hi`.
    #[arg(long)]
    x_range: Option<String>,
    #[arg(long, default_value = "0.1")]
    epsilon: String,
    /// Constant K of the default multiplier bound.
    #[arg(long = "K", default_value_t = DEFAULT_CAP_CONSTANT)]
    cap_constant: u64,
    /// Explicit multiplier cap, replacing the default bound.
    #[arg(long)]
    n0_cap: Option<u64>,
    /// Interior sample points checked per witness.
    #[arg(long, default_value_t = 16)]
    samples: u64,
}

#[derive(Args, Debug)]
struct WitnessArgs {
    #[command(flatten)]
    coeffs: CoeffArgs,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct Ap3Args {
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct DimensionArgs {
    #[command(flatten)]
    coeffs: CoeffArgs,
    #[arg(long)]
    s: Option<String>,
    #[arg(long, requires = "gamma")]
    beta: Option<String>,
    #[arg(long, requires = "beta")]
    gamma: Option<String>,
    #[arg(long, default_value = "0.1")]
    epsilon: String,
    /// File of `m delta` pairs, one level per line.
    #[arg(long)]
    levels: Option<String>,
}

#[derive(Args, Debug)]
struct CantorArgs {
    #[command(flatten)]
    coeffs: CoeffArgs,
    #[arg(long)]
    beta: String,
    #[arg(long)]
    gamma: String,
    #[arg(long, default_value_t = 2)]
    depth: u32,
    #[arg(long, default_value_t = 50)]
    u1: u64,
    #[arg(long, default_value_t = DEFAULT_U_CAP)]
    u_cap: u64,
    #[arg(long)]
    b3: Option<f64>,
    #[arg(long)]
    b4: Option<f64>,
    #[arg(long, default_value = "0.1")]
    epsilon: String,
    #[arg(long, default_value_t = 16)]
    samples: u64,
}

#[derive(Args, Debug)]
struct DiscrepancyArgs {
    #[arg(long)]
    points: String,
    #[arg(long = "K", default_value_t = 8)]
    k: u32,
    /// Constant in front of the Erdős–Turán–Koksma bracket.
    #[arg(long, default_value_t = 1.0)]
    c_d: f64,
    #[arg(long, default_value_t = DEFAULT_EXACT_LIMIT)]
    exact_limit: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Witness records, one JSON object per line.
    #[arg(long)]
    records: String,
    #[arg(long, default_value_t = 64)]
    samples: u64,
}

/// A usage problem, reported with exit status 64.
#[derive(Debug)]
struct Usage(String);

enum Failure {
    Usage(Usage),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Exact rational from `12.5`, `1e-3` or `n/d`.
pub fn parse_exact(s: &str) -> Result<Rational> {
    if s.contains('/') {
        Rational::from_str(s.trim()).map_err(|_| Error::Parse {
            line: 0,
            msg: format!("invalid fraction {s:?}"),
        })
    } else {
        parse_decimal(s)
    }
}

fn usage_rational(name: &str, s: &str) -> std::result::Result<Rational, Usage> {
    parse_exact(s).map_err(|_| Usage(format!("--{name}: cannot parse {s:?}")))
}

/// Validated settings shared by `witness` and `ap3`.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub coeffs: EquationCoeffs,
    pub beta: Rational,
    pub gamma: Rational,
    pub xs: (u64, u64),
    pub lift: LiftConfig,
    pub format: Format,
}

fn run_config(coeffs: EquationCoeffs, s: &SearchArgs, cert: Certifier, format: Format) -> std::result::Result<RunConfig, Usage> {
    let beta = usage_rational("beta", &s.beta)?;
    let gamma = usage_rational("gamma", &s.gamma)?;
    crate::alpha_solver::check_exponent_cell(&beta, &gamma).map_err(|e| Usage(e.to_string()))?;
    let epsilon = usage_rational("epsilon", &s.epsilon)?;
    if epsilon < 0 {
        return Err(Usage("--epsilon must be non-negative".into()));
    }
    let xs = match (&s.x, &s.x_range) {
        (Some(x), None) => (*x, *x),
        (None, Some(r)) => {
            let (lo, hi) = r.split_once(':').ok_or_else(|| Usage(format!("--x-range expects lo:hi, got {r:?}")))?;
            let p = |v: &str| v.trim().parse::<u64>().map_err(|_| Usage(format!("--x-range: bad bound {v:?}")));
            (p(lo)?, p(hi)?)
        }
        _ => return Err(Usage("one of --x or --x-range is required".into())),
    };
    if xs.0 < 3 {
        return Err(Usage("x must be at least 3".into()));
    }
    Ok(RunConfig {
        coeffs,
        beta,
        gamma,
        xs,
        lift: LiftConfig {
            cert,
            n0_cap: s.n0_cap,
            cap_constant: s.cap_constant,
            epsilon,
            verify_samples: s.samples,
            ..LiftConfig::default()
        },
        format,
    })
}

fn coeffs_from(c: &CoeffArgs) -> std::result::Result<EquationCoeffs, Usage> {
    EquationCoeffs::new(c.a, c.b, c.c).map_err(|e| Usage(e.to_string()))
}

/// Digits needed so that both printed window bounds stay strictly ordered.
fn window_digits(w: &ExponentWindow) -> usize {
    let len = w.length().to_f64();
    let need = if len > 0.0 { (-len.log10()).ceil() as usize + 12 } else { ALPHA_DIGITS };
    need.max(ALPHA_DIGITS)
}

/// One witness as a machine record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub record: String,
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub case: CaseTag,
    pub x: u64,
    pub z: u64,
    pub beta: String,
    pub gamma: String,
    pub alpha_lo: String,
    pub alpha_hi: String,
    pub ell_lo: String,
    pub ell_hi: String,
    pub window_lo: String,
    pub window_hi: String,
    #[serde(rename = "X")]
    pub big_x: u64,
    #[serde(rename = "Y")]
    pub big_y: u64,
    #[serde(rename = "Z")]
    pub big_z: u64,
    /// Integer triple before scaling by the multiplier.
    pub base: [u64; 3],
    pub n0: u64,
    pub n0_bound: u64,
    pub exceeds_bound: bool,
    pub floors: [String; 3],
    pub verified_samples: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ap: Option<[String; 3]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub difference: Option<String>,
}

impl WitnessRecord {
    pub fn from_witness(w: &SolvabilityWitness) -> Self {
        let win = &w.window;
        let (alpha_lo, alpha_hi) = win.theta.to_decimal(ALPHA_DIGITS);
        let (ell_lo, ell_hi) = win.ell.to_decimal(ALPHA_DIGITS);
        let d = window_digits(win);
        Self {
            record: "witness".into(),
            a: w.coeffs.a(),
            b: w.coeffs.b(),
            c: w.coeffs.c(),
            case: w.coeffs.case_tag(),
            x: win.x,
            z: win.z,
            beta: format_rational(&win.beta),
            gamma: format_rational(&win.gamma),
            alpha_lo,
            alpha_hi,
            ell_lo,
            ell_hi,
            window_lo: decimal_up(win.lo(), d),
            window_hi: decimal_down(win.hi(), d),
            big_x: w.big_x,
            big_y: w.big_y,
            big_z: w.big_z,
            base: [w.big_x / w.n0, w.big_y / w.n0, w.big_z / w.n0],
            n0: w.n0,
            n0_bound: w.n0_bound,
            exceeds_bound: w.exceeds_bound(),
            floors: [w.floors[0].to_string(), w.floors[1].to_string(), w.floors[2].to_string()],
            verified_samples: w.verified_samples,
            ap: None,
            difference: None,
        }
    }

    /// Rebuilds the witness on exactly the printed window.
    pub fn to_witness(&self) -> Result<SolvabilityWitness> {
        let coeffs = EquationCoeffs::new(self.a, self.b, self.c)?;
        if self.base.iter().zip([self.big_x, self.big_y, self.big_z]).any(|(b, v)| b.checked_mul(self.n0) != Some(v)) {
            return Err(Error::Certification("triple is not the base triple times n0".into()));
        }
        let beta = parse_exact(&self.beta)?;
        let gamma = parse_exact(&self.gamma)?;
        let theta = outward(&self.alpha_lo, &self.alpha_hi)?;
        let ell = outward(&self.ell_lo, &self.ell_hi)?;
        let lo = parse_float(&self.window_lo, Round::Up)?;
        let hi = parse_float(&self.window_hi, Round::Down)?;
        let window = ExponentWindow::from_parts(self.x, self.z, theta, ell, beta, gamma, lo, hi)?;
        let floors = [parse_integer(&self.floors[0])?, parse_integer(&self.floors[1])?, parse_integer(&self.floors[2])?];
        Ok(SolvabilityWitness {
            coeffs,
            window,
            big_x: self.big_x,
            big_y: self.big_y,
            big_z: self.big_z,
            n0: self.n0,
            floors,
            verified_samples: self.verified_samples,
            n0_bound: self.n0_bound,
            skipped: Vec::new(),
        })
    }
}

fn parse_integer(s: &str) -> Result<Integer> {
    Integer::from_str(s).map_err(|_| Error::Parse {
        line: 0,
        msg: format!("invalid integer {s:?}"),
    })
}

fn parse_float(s: &str, round: Round) -> Result<Float> {
    let bits = (s.len() as u32 * 4).max(64) + 16;
    let parsed = Float::parse(s).map_err(|_| Error::Parse {
        line: 0,
        msg: format!("invalid number {s:?}"),
    })?;
    Ok(Float::with_val_round(bits, parsed, round).0)
}

fn outward(lo: &str, hi: &str) -> Result<CertifiedReal> {
    CertifiedReal::new(parse_float(lo, Round::Down)?, parse_float(hi, Round::Up)?)
}

fn emit<T: Serialize>(out: &mut dyn Write, rec: &T) -> Result<()> {
    let line = serde_json::to_string(rec).expect("records serialize");
    writeln!(out, "{line}").map_err(io_error)
}

fn io_error(e: std::io::Error) -> Error {
    Error::Domain(format!("output: {e}"))
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|e| Error::Domain(format!("stdin: {e}")))
    } else {
        fs::read_to_string(path).map_err(|e| Error::Domain(format!("{path}: {e}")))
    }
}

enum XOutcome {
    Found(Box<SolvabilityWitness>),
    NoZ,
    Failed(Vec<(u64, Error)>),
}

fn search_x(cfg: &RunConfig, x: u64) -> Result<XOutcome> {
    let j = interval_j(&cfg.lift.cert, &cfg.coeffs, x, &cfg.beta, &cfg.gamma)?;
    if j.zs.is_empty() {
        return Ok(XOutcome::NoZ);
    }
    let mut errs = Vec::new();
    for z in j.zs {
        match make_witness(&cfg.lift, &cfg.coeffs, x, z, &cfg.beta, &cfg.gamma) {
            Ok(w) => return Ok(XOutcome::Found(Box::new(w))),
            Err(e) => errs.push((z, e)),
        }
    }
    Ok(XOutcome::Failed(errs))
}

/// The first witness (smallest working z) for every x in the range, ascending.
pub fn collect_witnesses(cfg: &RunConfig, err: &mut dyn Write) -> Result<Vec<SolvabilityWitness>> {
    let (lo, hi) = cfg.xs;
    if lo > hi {
        return Err(Error::NoAdmissibleZ { x: lo });
    }
    let outcomes: Vec<(u64, Result<XOutcome>)> = (lo..=hi).into_par_iter().map(|x| (x, search_x(cfg, x))).collect();
    let mut found = Vec::new();
    let mut worst: Option<Error> = None;
    let rank = |e: &Error| match e.exit_code() {
        2 => 1,
        3 => 2,
        4 => 3,
        5 => 4,
        _ => 0,
    };
    let mut note = |e: Error| {
        if worst.as_ref().map_or(true, |w| rank(&e) > rank(w)) {
            worst = Some(e);
        }
    };
    for (x, o) in outcomes {
        match o? {
            XOutcome::Found(w) => found.push(*w),
            XOutcome::NoZ => note(Error::NoAdmissibleZ { x }),
            XOutcome::Failed(errs) => {
                for (z, e) in errs {
                    let _ = writeln!(err, "x = {x}, z = {z}: {e}");
                    note(e);
                }
            }
        }
    }
    if found.is_empty() {
        return Err(worst.unwrap_or(Error::NoAdmissibleZ { x: lo }));
    }
    Ok(found)
}

fn print_witness_human(out: &mut dyn Write, r: &WitnessRecord) -> Result<()> {
    let io = |e| io_error(e);
    writeln!(out, "a={} b={} c={} ({:?})  x={} z={}", r.a, r.b, r.c, r.case, r.x, r.z).map_err(io)?;
    writeln!(out, "  alpha    in [{}, {}]", r.alpha_lo, r.alpha_hi).map_err(io)?;
    writeln!(out, "  window   [{}, {}]", r.window_lo, r.window_hi).map_err(io)?;
    writeln!(out, "  length   in [{}, {}]", r.ell_lo, r.ell_hi).map_err(io)?;
    writeln!(out, "  base     {} {} {}", r.base[0], r.base[1], r.base[2]).map_err(io)?;
    writeln!(out, "  X Y Z    {} {} {}   n0 = {}{}", r.big_x, r.big_y, r.big_z, r.n0, if r.exceeds_bound { " (above default bound)" } else { "" })
        .map_err(io)?;
    writeln!(out, "  floors   {} {} {}", r.floors[0], r.floors[1], r.floors[2]).map_err(io)?;
    if let (Some(ap), Some(d)) = (&r.ap, &r.difference) {
        writeln!(out, "  progression {} {} {}  difference {}", ap[0], ap[1], ap[2], d).map_err(io)?;
    }
    Ok(())
}

fn cmd_witness(cfg: &RunConfig, ap: bool, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let witnesses = collect_witnesses(cfg, err)?;
    for w in &witnesses {
        let mut r = WitnessRecord::from_witness(w);
        if ap {
            // x + y = 2z: the floors of X, Z, Y are in progression
            let [fx, fy, fz] = &w.floors;
            let d1 = Integer::from(fz - fx);
            let d2 = Integer::from(fy - fz);
            if d1 != d2 {
                return Err(Error::Certification(format!("floors of ({}, {}, {}) are not in progression", w.big_x, w.big_z, w.big_y)));
            }
            r.ap = Some([fx.to_string(), fz.to_string(), fy.to_string()]);
            r.difference = Some(d1.to_string());
        }
        match cfg.format {
            Format::Machine => emit(out, &r)?,
            Format::Human => print_witness_human(out, &r)?,
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Theorem1Record {
    record: &'static str,
    a: u64,
    b: u64,
    c: u64,
    s: String,
    bound: String,
    exact: String,
}

#[derive(Serialize)]
struct ExponentRecord {
    record: &'static str,
    beta: String,
    gamma: String,
    epsilon: String,
    r: String,
    q: String,
    d: String,
}

#[derive(Serialize)]
struct CantorBoundRecord {
    record: &'static str,
    m: Vec<u64>,
    delta: Vec<f64>,
    quotients: Vec<f64>,
    estimate: f64,
}

fn decimal(q: &Rational, digits: usize) -> String {
    let f = Float::with_val(256, q);
    f.to_string_radix(10, Some(digits))
}

fn parse_levels(text: &str) -> Result<(Vec<u64>, Vec<f64>)> {
    let mut m = Vec::new();
    let mut delta = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse { line: i + 1, msg };
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 2 {
            return Err(bad(format!("expected `m delta`, found {} fields", f.len())));
        }
        m.push(f[0].parse::<u64>().map_err(|_| bad(format!("invalid count {:?}", f[0])))?);
        delta.push(f[1].parse::<f64>().map_err(|_| bad(format!("invalid gap {:?}", f[1])))?);
    }
    Ok((m, delta))
}

fn cmd_dimension(a: &DimensionArgs, format: Format, out: &mut dyn Write) -> CliResult<()> {
    let coeffs = coeffs_from(&a.coeffs)?;
    if a.s.is_none() && a.beta.is_none() && a.levels.is_none() {
        return Err(Usage("give --s, --beta/--gamma or --levels".into()).into());
    }
    let io = |e| Failure::Run(io_error(e));
    if let Some(s) = &a.s {
        let sv = usage_rational("s", s)?;
        let v = theorem1_bound(&coeffs, &sv)?;
        let rec = Theorem1Record {
            record: "theorem1",
            a: coeffs.a(),
            b: coeffs.b(),
            c: coeffs.c(),
            s: format_rational(&sv),
            bound: decimal(&v, 20),
            exact: v.to_string(),
        };
        match format {
            Format::Machine => emit(out, &rec)?,
            Format::Human => writeln!(out, "dimension bound at s = {}: {} (= {})", rec.s, rec.bound, rec.exact).map_err(io)?,
        }
    }
    if let (Some(b), Some(g)) = (&a.beta, &a.gamma) {
        let (beta, gamma) = (usage_rational("beta", b)?, usage_rational("gamma", g)?);
        let eps = usage_rational("epsilon", &a.epsilon)?;
        crate::alpha_solver::check_exponent_cell(&beta, &gamma).map_err(|e| Usage(e.to_string()))?;
        let rec = ExponentRecord {
            record: "exponents",
            beta: format_rational(&beta),
            gamma: format_rational(&gamma),
            epsilon: format_rational(&eps),
            r: decimal(&r_exponent(&beta, &gamma, &eps)?, 20),
            q: decimal(&q_exponent(&beta, &gamma, &eps)?, 20),
            d: decimal(&dimension_bound(&coeffs, &beta, &gamma, &eps)?, 20),
        };
        match format {
            Format::Machine => emit(out, &rec)?,
            Format::Human => writeln!(out, "r = {}  q = {}  D = {}", rec.r, rec.q, rec.d).map_err(io)?,
        }
    }
    if let Some(path) = &a.levels {
        let (m, delta) = parse_levels(&read_input(path)?)?;
        let b = cantor_lower_bound(&m, &delta)?;
        let rec = CantorBoundRecord {
            record: "cantor_bound",
            m,
            delta,
            quotients: b.quotients,
            estimate: b.estimate,
        };
        match format {
            Format::Machine => emit(out, &rec)?,
            Format::Human => {
                for (k, q) in rec.quotients.iter().enumerate() {
                    writeln!(out, "k = {:>4}  quotient {q:.12}", k + 2).map_err(io)?;
                }
                writeln!(out, "estimate {:.12}", rec.estimate).map_err(io)?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct LevelRecord {
    record: &'static str,
    depth: u32,
    u: Option<u64>,
    count: usize,
    min_gap: Option<String>,
    min_len: String,
    b1: Option<f64>,
    b2: Option<f64>,
    b3: Option<f64>,
    b4: Option<f64>,
    failures: usize,
    dropped_overlaps: usize,
}

#[derive(Serialize)]
struct IntervalRecord {
    record: &'static str,
    depth: u32,
    index: usize,
    parent: Option<usize>,
    lo: String,
    hi: String,
    x: Option<u64>,
    z: Option<u64>,
}

#[derive(Serialize)]
struct RefinementRecord {
    record: &'static str,
    u: Vec<u64>,
    m: Vec<u64>,
    delta: Vec<f64>,
    quotients: Option<Vec<f64>>,
    estimate: Option<f64>,
    note: Option<String>,
}

fn level_records(level: &CantorLevel) -> (LevelRecord, Vec<IntervalRecord>) {
    let rec = LevelRecord {
        record: "level",
        depth: level.depth,
        u: level.u,
        count: level.len(),
        min_gap: level.min_gap.as_ref().map(|g| decimal_down(g.lo(), 12)),
        min_len: decimal_down(level.min_len.lo(), 12),
        b1: level.stats.b1,
        b2: level.stats.b2,
        b3: level.stats.b3,
        b4: level.stats.b4,
        failures: level.failures.len(),
        dropped_overlaps: level.dropped_overlaps,
    };
    let ivs = level
        .intervals
        .iter()
        .enumerate()
        .map(|(i, iv)| {
            let len = iv.length().to_f64();
            let d = if len > 0.0 { ((-len.log10()).ceil() as usize + 12).max(ALPHA_DIGITS) } else { ALPHA_DIGITS };
            IntervalRecord {
                record: "interval",
                depth: level.depth,
                index: i,
                parent: iv.parent,
                lo: decimal_up(&iv.lo, d),
                hi: decimal_down(&iv.hi, d),
                x: iv.witness.as_ref().map(|w| w.window.x),
                z: iv.witness.as_ref().map(|w| w.window.z),
            }
        })
        .collect();
    (rec, ivs)
}

fn cmd_cantor(a: &CantorArgs, cert: Certifier, format: Format, out: &mut dyn Write) -> CliResult<()> {
    let coeffs = coeffs_from(&a.coeffs)?;
    let beta = usage_rational("beta", &a.beta)?;
    let gamma = usage_rational("gamma", &a.gamma)?;
    crate::alpha_solver::check_exponent_cell(&beta, &gamma).map_err(|e| Usage(e.to_string()))?;
    let epsilon = usage_rational("epsilon", &a.epsilon)?;
    if a.depth == 0 || a.depth > crate::dimension::MAX_DEPTH {
        return Err(Usage(format!("--depth must be in 1..={}", crate::dimension::MAX_DEPTH)).into());
    }
    let cfg = LiftConfig {
        cert,
        epsilon,
        verify_samples: a.samples,
        ..LiftConfig::default()
    };
    let params = RefineParams {
        depth: a.depth,
        u1: a.u1,
        u_cap: a.u_cap,
        b3: a.b3,
        b4: a.b4,
    };
    let r = refine_levels(&cfg, &coeffs, &beta, &gamma, &params)?;
    let io = |e| Failure::Run(io_error(e));
    for level in &r.levels {
        let (rec, ivs) = level_records(level);
        match format {
            Format::Machine => {
                emit(out, &rec)?;
                for iv in &ivs {
                    emit(out, iv)?;
                }
            }
            Format::Human => {
                writeln!(
                    out,
                    "level {}  U = {}  intervals {}  min gap {}  min length {}",
                    rec.depth,
                    rec.u.map_or("-".to_string(), |u| u.to_string()),
                    rec.count,
                    rec.min_gap.as_deref().unwrap_or("-"),
                    rec.min_len
                )
                .map_err(io)?;
                let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6e}"));
                writeln!(out, "  B1 {}  B2 {}  B3 {}  B4 {}", show(rec.b1), show(rec.b2), show(rec.b3), show(rec.b4)).map_err(io)?;
                for iv in &ivs {
                    let tag = match (iv.x, iv.z) {
                        (Some(x), Some(z)) => format!("x={x} z={z}"),
                        _ => "seed".to_string(),
                    };
                    writeln!(out, "  [{}, {}]  {tag}", iv.lo, iv.hi).map_err(io)?;
                }
            }
        }
    }
    let (quotients, estimate, note) = match r.bound() {
        Ok(b) => (Some(b.quotients), Some(b.estimate), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    let rec = RefinementRecord {
        record: "refinement",
        u: r.u,
        m: r.m,
        delta: r.delta,
        quotients,
        estimate,
        note,
    };
    match format {
        Format::Machine => emit(out, &rec)?,
        Format::Human => {
            writeln!(out, "u {:?}  m {:?}  delta {:?}", rec.u, rec.m, rec.delta).map_err(io)?;
            match (&rec.estimate, &rec.note) {
                (Some(e), _) => writeln!(out, "finite-prefix estimate {e:.12}").map_err(io)?,
                (_, Some(n)) => writeln!(out, "no finite-prefix quotient: {n}").map_err(io)?,
                _ => {}
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct DiscrepancyRecord {
    record: &'static str,
    n: usize,
    dim: usize,
    mode: &'static str,
    discrepancy: f64,
    exact: Option<String>,
    slack: Option<f64>,
    #[serde(rename = "K")]
    k: u32,
    c_d: f64,
    etk_rhs: f64,
    min_c_d: f64,
}

fn cmd_discrepancy(a: &DiscrepancyArgs, format: Format, out: &mut dyn Write) -> CliResult<()> {
    if a.k == 0 || !(a.c_d > 0.0) {
        return Err(Usage("--K and --c-d must be positive".into()).into());
    }
    let ps = parse_points(&read_input(&a.points)?)?;
    let (value, mode, slack) = if ps.dim() == 1 {
        (discrepancy_1d(&ps)?, "exact", None)
    } else {
        match discrepancy_2d_with_limit(&ps, a.exact_limit)? {
            Discrepancy2d::Exact(v) => (v, "exact", None),
            Discrepancy2d::Approx { lower, slack } => (lower, "lower_bound", Some(slack.to_f64())),
        }
    };
    let rhs = etk_rhs(&ps, a.k, a.c_d)?;
    let bracket = rhs / a.c_d;
    let d = value.to_f64();
    let rec = DiscrepancyRecord {
        record: "discrepancy",
        n: ps.len(),
        dim: ps.dim(),
        mode,
        discrepancy: d,
        exact: (mode == "exact").then(|| value.to_string()),
        slack,
        k: a.k,
        c_d: a.c_d,
        etk_rhs: rhs,
        min_c_d: d / bracket,
    };
    let io = |e| Failure::Run(io_error(e));
    match format {
        Format::Machine => emit(out, &rec)?,
        Format::Human => {
            writeln!(out, "points {}  dimension {}  mode {}", rec.n, rec.dim, rec.mode).map_err(io)?;
            match (&rec.exact, rec.slack) {
                (Some(e), _) => writeln!(out, "discrepancy {} = {}", rec.discrepancy, e).map_err(io)?,
                (None, Some(s)) => writeln!(out, "discrepancy >= {}  (upper bound {})", rec.discrepancy, rec.discrepancy + s).map_err(io)?,
                _ => {}
            }
            writeln!(out, "ETK right-hand side (K = {}, C = {}) {}", rec.k, rec.c_d, rec.etk_rhs).map_err(io)?;
            writeln!(out, "smallest constant {}", rec.min_c_d).map_err(io)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct VerificationRecord {
    record: &'static str,
    line: usize,
    x: u64,
    z: u64,
    passed: bool,
    checked_points: u64,
    failures: Vec<String>,
}

fn cmd_verify(a: &VerifyArgs, cert: Certifier, format: Format, out: &mut dyn Write) -> CliResult<()> {
    let text = read_input(&a.records)?;
    let mut all_ok = true;
    let mut seen = 0;
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line = i + 1;
        let value: serde_json::Value = serde_json::from_str(raw).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        if value.get("record").and_then(|r| r.as_str()) != Some("witness") {
            continue;
        }
        seen += 1;
        let rec: WitnessRecord = serde_json::from_value(value).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        let (passed, checked, failures) = match rec.to_witness() {
            Ok(w) => {
                let v = verify(&cert, &w, a.samples)?;
                (v.passed, v.checked_points, v.failures)
            }
            Err(e) => (false, 0, vec![e.to_string()]),
        };
        all_ok &= passed;
        let r = VerificationRecord {
            record: "verification",
            line,
            x: rec.x,
            z: rec.z,
            passed,
            checked_points: checked,
            failures,
        };
        match format {
            Format::Machine => emit(out, &r)?,
            Format::Human => {
                writeln!(out, "line {}  x={} z={}  {}  ({} points)", r.line, r.x, r.z, if r.passed { "ok" } else { "FAILED" }, r.checked_points)
                    .map_err(|e| Failure::Run(io_error(e)))?;
                for f in &r.failures {
                    writeln!(out, "  {f}").map_err(|e| Failure::Run(io_error(e)))?;
                }
            }
        }
    }
    if seen == 0 {
        return Err(Error::Parse {
            line: 0,
            msg: "no witness records".into(),
        }
        .into());
    }
    if !all_ok {
        return Err(Error::Certification("at least one record failed verification".into()).into());
    }
    Ok(())
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let cert = Certifier::with_cap(cli.precision_cap).map_err(|e| Usage(e.to_string()))?;
    match &cli.command {
        Command::Witness(a) => {
            let cfg = run_config(coeffs_from(&a.coeffs)?, &a.search, cert, cli.format)?;
            Ok(cmd_witness(&cfg, false, out, err)?)
        }
        Command::Ap3(a) => {
            let coeffs = EquationCoeffs::new(1, 1, 2)?;
            let cfg = run_config(coeffs, &a.search, cert, cli.format)?;
            Ok(cmd_witness(&cfg, true, out, err)?)
        }
        Command::Dimension(a) => cmd_dimension(a, cli.format, out),
        Command::Cantor(a) => cmd_cantor(a, cert, cli.format, out),
        Command::Discrepancy(a) => cmd_discrepancy(a, cli.format, out),
        Command::Verify(a) => cmd_verify(a, cert, cli.format, out),
    }
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(Failure::Usage(Usage(msg))) => {
            let _ = writeln!(err, "usage error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Run(e)) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
