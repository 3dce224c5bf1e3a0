//! Points, intervals and metrics on subsets of the real line, plus the
//! sequence diagnostics (tail diameter, limit detection) every other module
//! leans on.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::report::{CheckReport, Fields};

/// Margin used to decide membership near an open endpoint: `x` belongs to
/// `(a, b]` when `a + DOMAIN_MARGIN <= x <= b`.
pub const DOMAIN_MARGIN: f64 = 1e-12;

/// Length of the window sampled on an unbounded interval `[a, inf)`.
pub const SAMPLING_WINDOW: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || !lo.is_finite() {
            return Err(Error::Argument(format!("bad interval bounds {lo}, {hi}")));
        }
        if hi.is_infinite() && (hi < 0.0 || hi_closed) {
            return Err(Error::Argument("only an open +inf upper bound is allowed".into()));
        }
        if lo > hi || (lo == hi && !(lo_closed && hi_closed)) {
            return Err(Error::Argument(format!(
                "empty interval {}",
                Interval {
                    lo,
                    hi,
                    lo_closed,
                    hi_closed
                }
            )));
        }
        Ok(Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        })
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, true)
    }

    pub fn point(x: f64) -> Result<Self> {
        Self::new(x, x, true, true)
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.hi.is_finite()
    }

    /// Exact membership (no margin at open ends).
    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    /// Membership with open endpoints pulled in by `margin`.
    pub fn contains_with_margin(&self, x: f64, margin: f64) -> bool {
        let (lo, hi) = self.effective_bounds(margin);
        x.is_finite() && x >= lo && x <= hi
    }

    /// Closed bounds after pulling open endpoints inward by `margin`.
    pub fn effective_bounds(&self, margin: f64) -> (f64, f64) {
        let lo = if self.lo_closed { self.lo } else { self.lo + margin };
        let hi = if self.hi_closed { self.hi } else { self.hi - margin };
        (lo, hi)
    }

    /// Bounds used for sampling; an unbounded upper end is cut at
    /// `lo + SAMPLING_WINDOW`.
    pub fn sampling_bounds(&self) -> (f64, f64) {
        let (lo, hi) = self.effective_bounds(DOMAIN_MARGIN);
        if hi.is_finite() {
            (lo, hi)
        } else {
            (lo, self.lo + SAMPLING_WINDOW)
        }
    }

    pub fn midpoint(&self) -> f64 {
        if self.hi.is_finite() {
            return 0.5 * (self.lo + self.hi);
        }
        let (lo, hi) = self.sampling_bounds();
        0.5 * (lo + hi)
    }

    /// True when the two intervals share at least one point.
    pub fn intersects(&self, other: &Interval) -> bool {
        let (a, b) = if self.lo <= other.lo {
            (self, other)
        } else {
            (other, self)
        };
        if b.lo < a.hi {
            return true;
        }
        b.lo == a.hi && a.hi_closed && b.lo_closed
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        if self.hi.is_infinite() {
            write!(f, "{l}{}, inf{r}", self.lo)
        } else {
            write!(f, "{l}{}, {}{r}", self.lo, self.hi)
        }
    }
}

/// A finite union of pairwise disjoint intervals, kept sorted. Most spaces
/// are a single interval; discrete spaces like `{0, 1}` are unions of
/// degenerate ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    parts: Vec<Interval>,
}

impl Domain {
    pub fn new(mut parts: Vec<Interval>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Argument("domain needs at least one interval".into()));
        }
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in parts.windows(2) {
            if w[0].intersects(&w[1]) {
                return Err(Error::Structure(format!("domain parts {} and {} overlap", w[0], w[1])));
            }
        }
        Ok(Domain { parts })
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn contains(&self, x: f64) -> bool {
        self.parts.iter().any(|p| p.contains_with_margin(x, DOMAIN_MARGIN))
    }

    /// Membership without the margin at open ends.
    pub fn contains_exact(&self, x: f64) -> bool {
        self.parts.iter().any(|p| p.contains(x))
    }

    /// Roughly `n` points spread over the parts: every degenerate part
    /// contributes its point, the rest share the remainder by length.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let mut out = Vec::new();
        let total: f64 = self
            .parts
            .iter()
            .map(|p| {
                let (lo, hi) = p.sampling_bounds();
                hi - lo
            })
            .sum();
        for p in &self.parts {
            let (lo, hi) = p.sampling_bounds();
            if p.is_degenerate() || hi <= lo {
                out.push(p.lo);
                continue;
            }
            let share = ((n as f64) * (hi - lo) / total).round() as usize;
            out.extend(linspace(lo, hi, share.max(2)));
        }
        out
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(" U ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl From<Interval> for Domain {
    fn from(i: Interval) -> Self {
        Domain { parts: vec![i] }
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

pub type DistFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Metric {
    /// `|x - y|`
    Usual,
    Custom {
        name: String,
        dist: DistFn,
    },
}

impl Metric {
    pub fn custom(name: &str, dist: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Metric::Custom {
            name: name.to_string(),
            dist: Arc::new(dist),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Metric::Usual => (x - y).abs(),
            Metric::Custom { dist, .. } => dist(x, y),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Metric::Usual => "usual",
            Metric::Custom { name, .. } => name,
        }
    }
}

impl fmt::Debug for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Metric({})", self.name())
    }
}

#[derive(Debug, Clone)]
pub struct MetricSpace {
    domain: Domain,
    metric: Metric,
}

impl MetricSpace {
    pub fn new(domain: impl Into<Domain>, metric: Metric) -> Self {
        MetricSpace {
            domain: domain.into(),
            metric,
        }
    }

    /// The real subset with `d(x, y) = |x - y|`.
    pub fn usual(domain: impl Into<Domain>) -> Self {
        Self::new(domain, Metric::Usual)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn contains(&self, x: f64) -> bool {
        self.domain.contains(x)
    }

    pub fn ensure_contains(&self, op: &str, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::domain(op, x, &self.domain))
        }
    }

    /// Distance with domain checks on both arguments.
    pub fn dist(&self, x: f64, y: f64) -> Result<f64> {
        self.ensure_contains("dist", x)?;
        self.ensure_contains("dist", y)?;
        Ok(self.metric.eval(x, y))
    }

    /// Distance without domain checks, for values already validated.
    #[inline]
    pub fn d(&self, x: f64, y: f64) -> f64 {
        self.metric.eval(x, y)
    }

    /// Largest pairwise distance among `points`.
    pub fn diameter(&self, points: &[f64]) -> f64 {
        let mut best = 0.0f64;
        for (i, &a) in points.iter().enumerate() {
            for &b in &points[i + 1..] {
                best = best.max(self.d(a, b));
            }
        }
        best
    }
}

/// Checks symmetry, identity of indiscernibles and the triangle inequality
/// over every sampled pair and triple. The first violation in lexicographic
/// index order is reported.
pub fn check_metric_axioms(space: &MetricSpace, samples: &[f64], tol: f64) -> Result<CheckReport> {
    const NAME: &str = "metric_axioms";
    if samples.is_empty() {
        return Err(Error::Argument("metric axiom check needs samples".into()));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    for &x in samples {
        space.ensure_contains(NAME, x)?;
    }
    let d = |a: f64, b: f64| space.d(a, b);

    for (i, &x) in samples.iter().enumerate() {
        if d(x, x).abs() > tol {
            return Ok(CheckReport::fail(
                NAME,
                Fields::new()
                    .with("axiom", "identity")
                    .with("x", x)
                    .with("d_xx", d(x, x)),
            ));
        }
        for &y in &samples[i + 1..] {
            let (dxy, dyx) = (d(x, y), d(y, x));
            if (dxy - dyx).abs() > tol {
                return Ok(CheckReport::fail(
                    NAME,
                    Fields::new()
                        .with("axiom", "symmetry")
                        .with("x", x)
                        .with("y", y)
                        .with("d_xy", dxy)
                        .with("d_yx", dyx),
                ));
            }
            if dxy < -tol || (x != y && dxy <= 0.0) {
                return Ok(CheckReport::fail(
                    NAME,
                    Fields::new()
                        .with("axiom", "positivity")
                        .with("x", x)
                        .with("y", y)
                        .with("d_xy", dxy),
                ));
            }
        }
    }
    let mut triples = 0usize;
    for &x in samples {
        for &y in samples {
            for &z in samples {
                triples += 1;
                let direct = d(x, z);
                let via = d(x, y) + d(y, z);
                if direct > via + tol {
                    return Ok(CheckReport::fail(
                        NAME,
                        Fields::new()
                            .with("axiom", "triangle")
                            .with("x", x)
                            .with("y", y)
                            .with("z", z)
                            .with("d_xz", direct)
                            .with("d_xy_plus_d_yz", via),
                    ));
                }
            }
        }
    }
    Ok(CheckReport::pass(NAME)
        .with("samples", samples.len())
        .with("triples", triples))
}

/// A finite stretch of a real sequence. `first_index` is the sequence index
/// of `terms[0]`; orbit traces start at 1, plain traces at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceTrace {
    pub first_index: usize,
    pub terms: Vec<f64>,
    /// Optional per-term label (for orbits: the map that produced the term).
    pub tags: Vec<&'static str>,
}

impl SequenceTrace {
    pub fn new(terms: Vec<f64>) -> Self {
        SequenceTrace {
            first_index: 0,
            terms,
            tags: Vec::new(),
        }
    }

    pub fn starting_at(first_index: usize, terms: Vec<f64>) -> Self {
        SequenceTrace {
            first_index,
            terms,
            tags: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.terms.last().copied()
    }

    /// Term with sequence index `n`.
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(self.first_index).and_then(|i| self.terms.get(i).copied())
    }
}

/// Largest distance `|a_i - a_j|` among terms with sequence index at least
/// `from_index`. Zero for an empty tail.
pub fn tail_diameter(trace: &SequenceTrace, from_index: usize) -> f64 {
    let start = from_index.saturating_sub(trace.first_index);
    let tail = trace.terms.get(start..).unwrap_or(&[]);
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if tail.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Returns the final term when the last `window` terms all lie within `tol`
/// of it.
pub fn detect_limit(trace: &SequenceTrace, tol: f64, window: usize) -> Result<Option<f64>> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    if window < 2 {
        return Err(Error::Argument(format!("window must be at least 2, got {window}")));
    }
    if trace.len() < window {
        return Err(Error::Argument(format!(
            "trace has {} terms, window needs {window}",
            trace.len()
        )));
    }
    let last = trace.terms[trace.len() - 1];
    let settled = trace.terms[trace.len() - window..]
        .iter()
        .all(|&v| (v - last).abs() <= tol);
    Ok(settled.then_some(last))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> MetricSpace {
        MetricSpace::usual(Interval::new(0.0, 1.0, false, true).unwrap())
    }

    #[test]
    fn dist_examples() {
        let s = unit();
        assert_eq!(
            s.dist(1.0 / 3.0, 5.0 / 12.0).unwrap(),
            (5.0f64 / 12.0 - 1.0 / 3.0).abs()
        );
        assert!((s.dist(1.0 / 3.0, 5.0 / 12.0).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(s.dist(0.25, 0.25).unwrap(), 0.0);
        // 3/8 - 5/16 is exact in binary
        assert_eq!(s.dist(3.0 / 8.0, 5.0 / 16.0).unwrap(), 1.0 / 16.0);
    }

    #[test]
    fn dist_outside_domain_is_an_error() {
        let s = unit();
        assert!(matches!(s.dist(0.0, 0.5), Err(Error::Domain { .. })));
        assert!(matches!(s.dist(1e-13, 0.5), Err(Error::Domain { .. })));
        assert!(s.dist(1e-12, 0.5).is_ok());
        assert!(matches!(s.dist(1.5, 0.5), Err(Error::Domain { .. })));
    }

    #[test]
    fn interval_rules() {
        assert!(Interval::new(1.0, 1.0, true, false).is_err());
        assert!(Interval::new(2.0, 1.0, true, true).is_err());
        assert!(Interval::new(0.0, f64::INFINITY, true, true).is_err());
        let half = Interval::new(0.0, f64::INFINITY, true, false).unwrap();
        assert!(half.contains(1e9));
        assert_eq!(half.sampling_bounds(), (0.0, SAMPLING_WINDOW));
        let a = Interval::new(0.0, 0.5, false, true).unwrap();
        let b = Interval::new(0.5, 1.0, false, true).unwrap();
        let c = Interval::new(0.5, 1.0, true, true).unwrap();
        assert!(!a.intersects(&b));
        assert!(a.intersects(&c));
    }

    #[test]
    fn usual_metric_passes_on_grid() {
        let s = unit();
        let grid: Vec<f64> = (1..=50).map(|k| k as f64 / 50.0).collect();
        assert!(check_metric_axioms(&s, &grid, 1e-12).unwrap().is_pass());
    }

    #[test]
    fn unsymmetrized_difference_fails_symmetry() {
        let s = MetricSpace::new(unit().domain().clone(), Metric::custom("diff", |x, y| x - y));
        let r = check_metric_axioms(&s, &[0.25, 0.5, 0.75], 1e-12).unwrap();
        assert!(!r.is_pass());
        let w = r.witness.unwrap();
        assert_eq!(w.get("axiom"), Some(&"symmetry".into()));
        assert!(w.num("x").unwrap() < w.num("y").unwrap());
    }

    #[test]
    fn squared_difference_fails_triangle() {
        let s = MetricSpace::new(
            Interval::closed(0.0, 1.0).unwrap(),
            Metric::custom("sq", |x, y| (x - y) * (x - y)),
        );
        let r = check_metric_axioms(&s, &[0.0, 0.5, 1.0], 1e-12).unwrap();
        let w = r.witness.expect("triangle violation");
        assert_eq!(w.get("axiom"), Some(&"triangle".into()));
        assert_eq!((w.num("x"), w.num("y"), w.num("z")), (Some(0.0), Some(0.5), Some(1.0)));
    }

    #[test]
    fn empty_samples_rejected() {
        assert!(matches!(
            check_metric_axioms(&unit(), &[], 1e-9),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn tail_diameter_examples() {
        let t = SequenceTrace::new(vec![1.0, 0.5, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(tail_diameter(&t, 2), 0.0);

        let osc = SequenceTrace::new(vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        for i in 0..4 {
            assert_eq!(tail_diameter(&osc, i), 1.0);
        }

        // A x_n = 1 - 2^{1-n}(1 - x0), indices from 1
        let x0 = 0.75;
        let geo = SequenceTrace::starting_at(1, (1..=60).map(|n| 1.0 - 2f64.powi(1 - n) * (1.0 - x0)).collect());
        assert_eq!(tail_diameter(&geo, 4), 0.03125);
    }

    #[test]
    fn detect_limit_examples() {
        let x0 = 0.75;
        let geo = SequenceTrace::starting_at(1, (1..=60).map(|n| 1.0 - 2f64.powi(1 - n) * (1.0 - x0)).collect());
        assert_eq!(detect_limit(&geo, 1e-9, 8).unwrap(), Some(1.0));

        let osc = SequenceTrace::new([1.0, 0.0, 0.0, 1.0].repeat(4));
        assert_eq!(detect_limit(&osc, 1e-9, 8).unwrap(), None);

        let c = SequenceTrace::new(vec![0.3; 10]);
        assert_eq!(detect_limit(&c, 1e-9, 8).unwrap(), Some(0.3));

        assert!(detect_limit(&c, 1e-9, 11).is_err());
        assert!(detect_limit(&c, 1e-9, 1).is_err());
    }

    #[test]
    fn grid_on_discrete_domain() {
        let d = Domain::new(vec![Interval::point(1.0).unwrap(), Interval::point(0.0).unwrap()]).unwrap();
        assert_eq!(d.grid(10), vec![0.0, 1.0]);
        assert!(d.contains(0.0) && d.contains(1.0) && !d.contains(0.5));
    }
}
