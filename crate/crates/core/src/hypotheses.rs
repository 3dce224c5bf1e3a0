//! Pair hypotheses for `(A, S)`: weak commutativity on samples, and
//! compatibility, compatibility of type (A) and reciprocal continuity along
//! explicit witness sequences `x_n = a + b/n`.

use std::fmt;

use crate::dsl::PiecewiseFn;
use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::report::{CheckReport, Fields, Verdict};

/// Doublings sampled by default: `n0, 2 n0, ..., 2^23 n0`.
pub const DEFAULT_SAMPLES: usize = 24;

/// Default tolerance on extrapolated limits.
pub const LIMIT_TOL: f64 = 1e-6;

/// `x_n = a + b/n` for `n >= n0`, expected to tend to `limit`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessSequence {
    pub a: f64,
    pub b: f64,
    pub n0: usize,
    pub limit: f64,
}

impl WitnessSequence {
    pub fn new(a: f64, b: f64, n0: usize, limit: f64) -> Result<Self> {
        if n0 == 0 {
            return Err(Error::Argument("witness start index must be at least 1".into()));
        }
        if !(a.is_finite() && b.is_finite() && limit.is_finite()) {
            return Err(Error::Argument("witness coefficients must be finite".into()));
        }
        if (a - limit).abs() > 1e-12 {
            return Err(Error::Argument(format!(
                "x_n = {a} + {b}/n tends to {a}, not the declared limit {limit}"
            )));
        }
        Ok(WitnessSequence { a, b, n0, limit })
    }

    pub fn at(&self, n: usize) -> f64 {
        self.a + self.b / n as f64
    }

    /// `n0 * 2^k` for `k < samples`.
    pub fn schedule(&self, samples: usize) -> Vec<usize> {
        (0..samples).map(|k| self.n0 << k).collect()
    }

    fn fields(&self) -> Fields {
        Fields::new()
            .with("witness", self.to_string())
            .with("a", self.a)
            .with("b", self.b)
            .with("n0", self.n0)
    }
}

impl fmt::Display for WitnessSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.b < 0.0 { '-' } else { '+' };
        write!(f, "x_n = {} {sign} {}/n, n >= {}", self.a, self.b.abs(), self.n0)
    }
}

/// A composition word over `A` and `S`, applied right to left: `"AS"` is
/// `x -> A(S(x))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word(String);

impl Word {
    pub fn new(w: &str) -> Result<Self> {
        if w.is_empty() || !w.chars().all(|c| c == 'A' || c == 'S') {
            return Err(Error::Argument(format!(
                "composition {w:?} must be a word over A and S"
            )));
        }
        Ok(Word(w.to_string()))
    }

    /// Applies the word, failing with a domain error as soon as an
    /// intermediate image leaves `space`.
    pub fn apply(&self, space: &MetricSpace, a: &PiecewiseFn, s: &PiecewiseFn, x: f64) -> Result<f64> {
        self.0.chars().rev().try_fold(x, |v, c| {
            let (name, f) = if c == 'A' { ("A", a) } else { ("S", s) };
            let image = f.eval(v)?;
            space.ensure_contains(name, image)?;
            Ok(image)
        })
    }

    /// `A^2`, `SA`, ... with repeated letters collapsed into powers.
    pub fn pretty(&self) -> String {
        let b = self.0.as_bytes();
        if b.len() > 1 && b.iter().all(|&c| c == b[0]) {
            format!("{}^{}", b[0] as char, b.len())
        } else {
            self.0.clone()
        }
    }
}

/// A real-valued function of `x_n` whose limit is wanted.
#[derive(Debug, Clone, PartialEq)]
pub enum Quantity {
    Value(Word),
    Dist(Word, Word),
}

impl Quantity {
    pub fn value(w: &str) -> Self {
        Quantity::Value(Word::new(w).expect("static word"))
    }

    pub fn dist(u: &str, v: &str) -> Self {
        Quantity::Dist(Word::new(u).expect("static word"), Word::new(v).expect("static word"))
    }

    fn eval(&self, space: &MetricSpace, a: &PiecewiseFn, s: &PiecewiseFn, x: f64) -> Result<f64> {
        match self {
            Quantity::Value(w) => w.apply(space, a, s, x),
            Quantity::Dist(u, v) => Ok(space.d(u.apply(space, a, s, x)?, v.apply(space, a, s, x)?)),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Value(w) => write!(f, "{}x_n", w.pretty()),
            Quantity::Dist(u, v) => write!(f, "d({}x_n,{}x_n)", u.pretty(), v.pretty()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub quantity: String,
    pub ns: Vec<usize>,
    pub values: Vec<f64>,
    /// `2 v(2n) - v(n)` on the last two samples.
    pub limit: f64,
    pub converged: bool,
}

/// Samples `q` at `n0, 2 n0, 4 n0, ...`. Converged when the last two
/// doublings each move the value by at most `tol`.
pub fn limit_along_witness(
    space: &MetricSpace,
    a: &PiecewiseFn,
    s: &PiecewiseFn,
    q: &Quantity,
    w: &WitnessSequence,
    samples: usize,
    tol: f64,
) -> Result<LimitReport> {
    if samples < 3 {
        return Err(Error::Argument(format!("need at least 3 samples, got {samples}")));
    }
    let ns = w.schedule(samples);
    let values = ns
        .iter()
        .map(|&n| {
            let x = w.at(n);
            let at_n = |e: Error| match e {
                Error::Domain { op, point, domain } => Error::Domain {
                    op: format!("{op} of {q} at n = {n}"),
                    point,
                    domain,
                },
                other => other,
            };
            space.ensure_contains("witness", x).map_err(at_n)?;
            q.eval(space, a, s, x).map_err(at_n)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = values.len();
    let (v0, v1, v2) = (values[k - 3], values[k - 2], values[k - 1]);
    Ok(LimitReport {
        quantity: q.to_string(),
        ns,
        limit: 2.0 * v2 - v1,
        converged: (v2 - v1).abs() <= tol && (v1 - v0).abs() <= tol,
        values,
    })
}

/// Sampling and tolerance settings for the witness checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitOptions {
    pub samples: usize,
    pub tol: f64,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions {
            samples: DEFAULT_SAMPLES,
            tol: LIMIT_TOL,
        }
    }
}

/// Passes iff `d(SAx, ASx) <= d(Ax, Sx) + tol` at every sample.
pub fn check_weakly_commuting(
    space: &MetricSpace,
    a: &PiecewiseFn,
    s: &PiecewiseFn,
    samples: &[f64],
    tol: f64,
) -> Result<CheckReport> {
    let check = "weakly_commuting";
    let (sa, as_, aw, sw) = (Word::new("SA")?, Word::new("AS")?, Word::new("A")?, Word::new("S")?);
    let mut worst: f64 = f64::NEG_INFINITY;
    for &x in samples {
        let with_x = |e: Error| match e {
            Error::Domain { op, point, domain } => Error::Domain {
                op: format!("{op} in weak commutativity at x = {x}"),
                point,
                domain,
            },
            other => other,
        };
        space.ensure_contains(check, x)?;
        let lhs = space.d(
            sa.apply(space, a, s, x).map_err(with_x)?,
            as_.apply(space, a, s, x).map_err(with_x)?,
        );
        let rhs = space.d(aw.apply(space, a, s, x)?, sw.apply(space, a, s, x)?);
        worst = worst.max(lhs - rhs);
        if lhs > rhs + tol {
            return Ok(CheckReport::fail(
                check,
                Fields::new().with("x", x).with("d(SAx,ASx)", lhs).with("d(Ax,Sx)", rhs),
            )
            .with("samples", samples.len()));
        }
    }
    Ok(CheckReport::pass(check)
        .with("samples", samples.len())
        .with("max_excess", if samples.is_empty() { 0.0 } else { worst }))
}

struct Premise {
    lim_a: LimitReport,
    lim_s: LimitReport,
    holds: bool,
}

fn premise(
    space: &MetricSpace,
    a: &PiecewiseFn,
    s: &PiecewiseFn,
    w: &WitnessSequence,
    opts: &LimitOptions,
    t: Option<f64>,
) -> Result<Premise> {
    let lim_a = limit_along_witness(space, a, s, &Quantity::value("A"), w, opts.samples, opts.tol)?;
    let lim_s = limit_along_witness(space, a, s, &Quantity::value("S"), w, opts.samples, opts.tol)?;
    let mut holds = lim_a.converged && lim_s.converged && (lim_a.limit - lim_s.limit).abs() <= opts.tol;
    if let Some(t) = t {
        holds &= (lim_a.limit - t).abs() <= opts.tol;
    }
    Ok(Premise { lim_a, lim_s, holds })
}

fn base_report(check: &str, w: &WitnessSequence, p: &Premise) -> CheckReport {
    let mut r = CheckReport::new(check, Verdict::Pass);
    for (k, v) in w.fields().0 {
        r.details.push(&k, v);
    }
    r.with("lim_A", p.lim_a.limit).with("lim_S", p.lim_s.limit)
}

fn vacuous(mut r: CheckReport) -> CheckReport {
    r.verdict = Verdict::Vacuous;
    r.with("reason", "lim Ax_n and lim Sx_n do not coincide along the witness")
}

/// Sets the verdict from the quantities that must vanish (or match) and
/// copies their limits into the report.
fn conclude(mut r: CheckReport, limits: &[(&str, &LimitReport, f64)], tol: f64) -> CheckReport {
    let mut verdict = Verdict::Pass;
    let mut witness = Fields::new();
    for (key, l, target) in limits {
        r.details.push(key, l.limit);
        if !l.converged {
            verdict = Verdict::Inconclusive;
        } else if (l.limit - target).abs() > tol && verdict != Verdict::Inconclusive {
            verdict = Verdict::Fail;
            if witness.is_empty() {
                witness = Fields::new()
                    .with("quantity", l.quantity.clone())
                    .with("limit", l.limit)
                    .with("expected", *target);
            }
        }
    }
    r.verdict = verdict;
    if verdict == Verdict::Fail {
        r.witness = Some(witness);
    }
    r
}

/// `lim d(SAx_n, ASx_n) = 0` along `w`, given `lim Ax_n = lim Sx_n`.
pub fn check_compatible(
    space: &MetricSpace,
    a: &PiecewiseFn,
    s: &PiecewiseFn,
    w: &WitnessSequence,
    opts: &LimitOptions,
) -> Result<CheckReport> {
    let p = premise(space, a, s, w, opts, None)?;
    let r = base_report("compatible", w, &p);
    if !p.holds {
        return Ok(vacuous(r));
    }
    let l = limit_along_witness(space, a, s, &Quantity::dist("SA", "AS"), w, opts.samples, opts.tol)?;
    Ok(conclude(r, &[("limit", &l, 0.0)], opts.tol))
}

/// Type (A): `lim d(ASx_n, S^2x_n) = 0` and `lim d(SAx_n, A^2x_n) = 0`.
/// `d(SAx_n, S^2x_n)` is reported alongside; `limit` holds the larger of
/// the two checked limits.
pub fn check_compatible_type_a(
    space: &MetricSpace,
    a: &PiecewiseFn,
    s: &PiecewiseFn,
    w: &WitnessSequence,
    opts: &LimitOptions,
) -> Result<CheckReport> {
    let p = premise(space, a, s, w, opts, None)?;
    let r = base_report("compatible_type_a", w, &p);
    if !p.holds {
        return Ok(vacuous(r));
    }
    let lim = |u: &str, v: &str| limit_along_witness(space, a, s, &Quantity::dist(u, v), w, opts.samples, opts.tol);
    let as_s2 = lim("AS", "SS")?;
    let sa_a2 = lim("SA", "AA")?;
    let sa_s2 = lim("SA", "SS")?;
    let r = conclude(
        r,
        &[("d(ASx_n,S^2x_n)", &as_s2, 0.0), ("d(SAx_n,A^2x_n)", &sa_a2, 0.0)],
        opts.tol,
    );
    Ok(r.with("d(SAx_n,S^2x_n)", sa_s2.limit)
        .with("limit", as_s2.limit.max(sa_a2.limit)))
}

/// `lim ASx_n = At` and `lim SAx_n = St`, given `lim Ax_n = lim Sx_n = t`.
pub fn check_reciprocal_continuity(
    space: &MetricSpace,
    a: &PiecewiseFn,
    s: &PiecewiseFn,
    w: &WitnessSequence,
    t: f64,
    opts: &LimitOptions,
) -> Result<CheckReport> {
    let p = premise(space, a, s, w, opts, Some(t))?;
    let r = base_report("reciprocal_continuity", w, &p).with("t", t);
    if !p.holds {
        return Ok(vacuous(r));
    }
    space.ensure_contains("reciprocal_continuity", t)?;
    let (at, st) = (a.eval(t)?, s.eval(t)?);
    let lim = |q: &str| limit_along_witness(space, a, s, &Quantity::value(q), w, opts.samples, opts.tol);
    let (as_, sa) = (lim("AS")?, lim("SA")?);
    let r = conclude(r, &[("lim_AS", &as_, at), ("lim_SA", &sa, st)], opts.tol);
    Ok(r.with("A_t", at).with("S_t", st))
}

/// Candidate witnesses `t +- 1/n` at every breakpoint `t` of `A` or `S`
/// that lies in the space, each starting at the first `n >= 2` from which
/// the whole tail stays inside the space.
pub fn auto_witnesses(space: &MetricSpace, a: &PiecewiseFn, s: &PiecewiseFn) -> Vec<WitnessSequence> {
    let mut pts: Vec<f64> = a.breakpoints().into_iter().chain(s.breakpoints()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut out = Vec::new();
    for t in pts.into_iter().filter(|&t| space.contains(t)) {
        for b in [-1.0, 1.0] {
            let tail_ok = |n0: usize| (0..40).all(|k| space.contains(t + b / (n0 << k) as f64));
            if let Some(n0) = (2..=1024).find(|&n0| tail_ok(n0)) {
                out.push(WitnessSequence { a: t, b, n0, limit: t });
            }
        }
    }
    out
}
