//! `(S, T, A)`-orbits: `A x_n = S x_{n-1}` for odd `n` and `T x_{n-1}` for
//! even `n`, each `x_n` recovered by inverting `A`.

use std::fmt;
use std::io;

use serde::Serialize;

use crate::contraction::{check_pair, CheckOptions, InequalityForm, MapTriple, PairStatus};
use crate::error::{Error, Result};
use crate::metric::{tail_diameter, SequenceTrace};
use crate::phi::PhiSpec;
use crate::report::{CheckReport, Fields, Verdict};

pub const DEFAULT_MAX_N: usize = 10_000;
pub const DEFAULT_TOL_FIX: f64 = 1e-9;
pub const DEFAULT_WINDOW: usize = 8;

/// Step periods looked for in an oscillating tail.
const OSCILLATION_PERIODS: [usize; 2] = [2, 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Applied {
    S,
    T,
}

impl Applied {
    fn for_step(n: usize) -> Self {
        if n % 2 == 1 {
            Applied::S
        } else {
            Applied::T
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Applied::S => "S",
            Applied::T => "T",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitStep {
    pub n: usize,
    pub x: f64,
    pub ax: f64,
    pub applied: Applied,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Converged {
        limit: f64,
        constant_tail: bool,
    },
    /// The tail repeats with `period` steps through `limit_points`.
    Oscillating {
        period: usize,
        limit_points: Vec<f64>,
    },
    /// `value = S x_{n-1}` (or `T x_{n-1}`) has no admissible `A`-preimage.
    Stalled {
        n: usize,
        value: f64,
        reason: String,
    },
    /// Budget exhausted; `period` is the shortest tail period found, if any.
    Budget {
        period: Option<usize>,
    },
}

impl Termination {
    pub fn kind(&self) -> &'static str {
        match self {
            Termination::Converged { .. } => "converged",
            Termination::Oscillating { .. } => "oscillating",
            Termination::Stalled { .. } => "stalled",
            Termination::Budget { .. } => "budget",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Converged { limit, .. } => write!(f, "converged to {limit}"),
            Termination::Oscillating { period, limit_points } => {
                write!(f, "oscillating with period {period} through {limit_points:?}")
            }
            Termination::Stalled { n, value, reason } => {
                write!(f, "stalled at n = {n}: {value} ({reason})")
            }
            Termination::Budget { period: Some(p) } => write!(f, "budget exhausted (tail period {p})"),
            Termination::Budget { period: None } => write!(f, "budget exhausted"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitTrace {
    pub x0: f64,
    pub steps: Vec<OrbitStep>,
    pub termination: Termination,
}

impl OrbitTrace {
    /// `A x_1, A x_2, ...` indexed from 1.
    pub fn images(&self) -> SequenceTrace {
        let mut t = SequenceTrace::starting_at(1, self.steps.iter().map(|s| s.ax).collect());
        t.tags = self.steps.iter().map(|s| s.applied.as_str()).collect();
        t
    }

    /// `d(A x_n, A x_{n+1})` for `n = 1, 2, ...`.
    pub fn gaps(&self) -> Vec<f64> {
        self.steps.windows(2).map(|w| (w[1].ax - w[0].ax).abs()).collect()
    }

    /// Writes `n,x_n,Ax_n,applied_map,gap`; the gap column is empty on the
    /// last row.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["n", "x_n", "Ax_n", "applied_map", "gap"])
            .map_err(csv_err)?;
        for (i, s) in self.steps.iter().enumerate() {
            let gap = self
                .steps
                .get(i + 1)
                .map(|next| (next.ax - s.ax).abs().to_string())
                .unwrap_or_default();
            w.write_record([
                s.n.to_string(),
                s.x.to_string(),
                s.ax.to_string(),
                s.applied.as_str().to_string(),
                gap,
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitOptions {
    pub max_n: usize,
    /// Tail diameter accepted as convergence.
    pub tol: f64,
    pub window: usize,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            max_n: DEFAULT_MAX_N,
            tol: DEFAULT_TOL_FIX,
            window: DEFAULT_WINDOW,
        }
    }
}

/// Iterates the orbit from `x0` until it converges, oscillates, stalls or
/// uses up `opts.max_n` steps.
pub fn build_orbit(triple: &MapTriple, x0: f64, opts: &OrbitOptions) -> Result<OrbitTrace> {
    if opts.window < 3 {
        return Err(Error::Argument(format!(
            "window must be at least 3, got {}",
            opts.window
        )));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::Argument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    triple.space.ensure_contains("build_orbit", x0)?;
    let mut steps: Vec<OrbitStep> = Vec::new();
    let mut prev = x0;
    for n in 1..=opts.max_n {
        let applied = Applied::for_step(n);
        let map = match applied {
            Applied::S => &triple.s,
            Applied::T => &triple.t,
        };
        let value = map.eval(prev)?;
        let stalled = |reason: String| OrbitTrace {
            x0,
            steps: steps.clone(),
            termination: Termination::Stalled { n, value, reason },
        };
        let x = match triple.a.preimage(value, &triple.inverse, Some(prev)) {
            Ok(Some(x)) => x,
            Ok(None) => return Ok(stalled("value outside the range of A".into())),
            Err(e @ Error::Inversion(_)) => return Ok(stalled(e.to_string())),
            Err(e) => return Err(e),
        };
        steps.push(OrbitStep {
            n,
            x,
            ax: value,
            applied,
        });
        if let Some(t) = classify_tail(&steps, opts) {
            return Ok(OrbitTrace {
                x0,
                steps,
                termination: t,
            });
        }
        prev = x;
    }
    let period = scan_period(&steps, opts.tol);
    Ok(OrbitTrace {
        x0,
        steps,
        termination: Termination::Budget { period },
    })
}

fn classify_tail(steps: &[OrbitStep], opts: &OrbitOptions) -> Option<Termination> {
    let ax: Vec<f64> = steps.iter().map(|s| s.ax).collect();
    let k = ax.len();
    if k >= 3 && ax[k - 3] == ax[k - 1] && ax[k - 2] == ax[k - 1] {
        return Some(Termination::Converged {
            limit: ax[k - 1],
            constant_tail: true,
        });
    }
    if k < opts.window {
        return None;
    }
    let tail = &ax[k - opts.window..];
    let trace = SequenceTrace::new(tail.to_vec());
    if tail_diameter(&trace, 0) <= opts.tol {
        return Some(Termination::Converged {
            limit: ax[k - 1],
            constant_tail: false,
        });
    }
    for p in OSCILLATION_PERIODS {
        if p < tail.len() && repeats(tail, p, opts.tol) {
            let limit_points = distinct(&tail[tail.len() - p..], opts.tol);
            if limit_points.len() > 1 {
                return Some(Termination::Oscillating {
                    period: p,
                    limit_points,
                });
            }
        }
    }
    None
}

fn repeats(tail: &[f64], p: usize, tol: f64) -> bool {
    tail.windows(p + 1).all(|w| (w[p] - w[0]).abs() <= tol)
}

fn distinct(vals: &[f64], tol: f64) -> Vec<f64> {
    let mut v = vals.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= tol);
    v
}

/// Shortest period `p <= 16` of the last 32 images, if any.
fn scan_period(steps: &[OrbitStep], tol: f64) -> Option<usize> {
    let ax: Vec<f64> = steps.iter().rev().take(32).map(|s| s.ax).collect();
    (1..=16).find(|&p| p < ax.len() && repeats(&ax, p, tol))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub a: f64,
    pub s: f64,
    pub t: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.a.max(self.s).max(self.t)
    }
}

/// Residuals `d(Au, u)`, `d(Su, u)`, `d(Tu, u)`.
pub fn residuals(triple: &MapTriple, u: f64) -> Result<Residuals> {
    triple.space.ensure_contains("residuals", u)?;
    let d = |v: f64| triple.space.d(v, u);
    Ok(Residuals {
        a: d(triple.a.eval(u)?),
        s: d(triple.s.eval(u)?),
        t: d(triple.t.eval(u)?),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x0: f64,
    pub candidate: Option<f64>,
    /// Residuals at the last orbit image, whatever the termination.
    pub residuals: Option<Residuals>,
    pub iterations: usize,
    pub tol_fix: f64,
    pub decay_ok: Option<bool>,
    pub reason: String,
    pub trace: OrbitTrace,
}

impl SolveReport {
    pub fn to_check(&self) -> CheckReport {
        let verdict = if self.candidate.is_some() {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        let mut r = CheckReport::new("solve", verdict)
            .with("x0", self.x0)
            .with("termination", self.trace.termination.kind())
            .with("iterations", self.iterations)
            .with("tol_fix", self.tol_fix);
        if let Some(u) = self.candidate {
            r = r.with("candidate", u);
        }
        match &self.trace.termination {
            Termination::Converged { limit, constant_tail } => {
                r = r.with("limit", *limit).with("constant_tail", *constant_tail);
            }
            Termination::Oscillating { period, limit_points } => {
                r = r.with("period", *period).with("limit_points", limit_points.clone());
            }
            Termination::Stalled { n, value, .. } => {
                r = r.with("stall_n", *n).with("stall_value", *value);
            }
            Termination::Budget { period } => {
                if let Some(p) = period {
                    r = r.with("period", *p);
                }
            }
        }
        if let Some(res) = self.residuals {
            r = r
                .with("residual_A", res.a)
                .with("residual_S", res.s)
                .with("residual_T", res.t);
        }
        if let Some(ok) = self.decay_ok {
            r = r.with("decay_ok", ok);
        }
        r.with("reason", self.reason.clone())
    }
}

/// Builds the orbit with convergence tolerance `tol_fix` and accepts the
/// limit `u` of `A x_n` as a common fixed point when every residual is at
/// most `tol_fix`.
pub fn solve_common_fixed_point(
    triple: &MapTriple,
    x0: f64,
    tol_fix: f64,
    max_n: usize,
    phi: Option<&PhiSpec>,
) -> Result<SolveReport> {
    let opts = OrbitOptions {
        max_n,
        tol: tol_fix,
        ..OrbitOptions::default()
    };
    let trace = build_orbit(triple, x0, &opts)?;
    let last = trace.steps.last().map(|s| s.ax);
    let res = match last {
        Some(u) => residuals(triple, u).ok(),
        None => None,
    };
    let decay_ok = match phi {
        Some(p) if trace.steps.len() >= 3 => Some(verify_decay(&trace, p, tol_fix)?.is_pass()),
        _ => None,
    };
    let (candidate, reason) = match (&trace.termination, res) {
        (Termination::Converged { limit, .. }, Some(r)) if r.max() <= tol_fix => {
            (Some(*limit), "all residuals within tolerance".to_string())
        }
        (Termination::Converged { .. }, Some(r)) => (
            None,
            format!("limit is not a common fixed point (max residual {})", r.max()),
        ),
        (Termination::Converged { limit, .. }, None) => (None, format!("limit {limit} is outside the space")),
        (t, _) => (None, format!("no limit: {t}")),
    };
    Ok(SolveReport {
        x0,
        candidate,
        residuals: res,
        iterations: trace.steps.len(),
        tol_fix,
        decay_ok,
        reason,
        trace,
    })
}

/// Checks `d(Ax_n, Ax_{n+1}) <= phi(d(Ax_{n-1}, Ax_n)) + tol` for every
/// step and the envelope `d(Ax_{n+1}, Ax_{n+2}) <= phi^n(d(Ax_1, Ax_2)) + tol`.
pub fn verify_decay(trace: &OrbitTrace, phi: &PhiSpec, tol: f64) -> Result<CheckReport> {
    if trace.steps.len() < 3 {
        return Err(Error::Argument(format!(
            "decay check needs at least 3 orbit steps, got {}",
            trace.steps.len()
        )));
    }
    let gaps = trace.gaps();
    let check = "decay";
    for n in 1..gaps.len() {
        let bound = phi.eval(gaps[n - 1])?;
        if gaps[n] > bound + tol {
            return Ok(CheckReport::fail(
                check,
                Fields::new()
                    .with("relation", "step")
                    .with("n", n + 1)
                    .with("gap", gaps[n])
                    .with("bound", bound),
            ));
        }
    }
    let mut envelope = gaps[0];
    for (n, &gap) in gaps.iter().enumerate().skip(1) {
        envelope = phi.eval(envelope)?;
        if gap > envelope + tol {
            return Ok(CheckReport::fail(
                check,
                Fields::new()
                    .with("relation", "envelope")
                    .with("n", n)
                    .with("gap", gap)
                    .with("bound", envelope),
            ));
        }
    }
    Ok(CheckReport::pass(check)
        .with("gaps", gaps.len())
        .with("first_gap", gaps[0])
        .with("last_gap", gaps[gaps.len() - 1]))
}

/// Uniqueness argument: two distinct common fixed points must violate the
/// inequality at `(u, v)`.
pub fn verify_uniqueness_pairwise(
    triple: &MapTriple,
    u: f64,
    v: f64,
    form: &InequalityForm,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    if (u - v).abs() <= opts.tol {
        return Err(Error::Argument(format!("points {u} and {v} coincide")));
    }
    let check = "uniqueness";
    for (name, p) in [("u", u), ("v", v)] {
        let r = residuals(triple, p)?;
        if r.max() > DEFAULT_TOL_FIX {
            return Ok(CheckReport::new(check, Verdict::Inconclusive)
                .with("reason", "not_fixed")
                .with("point", name)
                .with("value", p)
                .with("max_residual", r.max()));
        }
    }
    let pv = check_pair(form, triple, u, v, opts)?;
    let r = CheckReport::new(check, Verdict::Pass)
        .with("u", u)
        .with("v", v)
        .with("status", pv.status.as_str())
        .with("lhs", pv.lhs)
        .with("rhs", pv.rhs);
    Ok(match pv.status {
        PairStatus::Violated | PairStatus::ZeroBranchViolated => r,
        _ => {
            let mut r = r.with("reason", "uniqueness argument inconclusive");
            r.verdict = Verdict::Inconclusive;
            r
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_piecewise, PiecewiseFn};
    use crate::metric::{Domain, Interval, MetricSpace};

    fn pw(t: &str) -> PiecewiseFn {
        parse_piecewise(t).unwrap()
    }

    fn phi(t: &str) -> PhiSpec {
        PhiSpec::parse_validated(t).unwrap()
    }

    fn ex33() -> MapTriple {
        MapTriple::new(
            MetricSpace::usual(Interval::new(0.0, 1.0, false, true).unwrap()),
            pw("piece (0,1/3]: 1 - 2*x; piece (1/3,1]: 1/6"),
            pw("piece (0,1/3]: x; piece (1/3,1): 1/3; piece [1,1]: 3/8"),
            pw("piece (0,1/3]: x; piece (1/3,1): 1/3; piece [1,1]: 5/12"),
        )
        .unwrap()
    }

    fn ex34() -> MapTriple {
        MapTriple::new(
            MetricSpace::usual(Interval::new(0.0, 2.0, false, true).unwrap()),
            pw("piece (0,1/2]: 2; piece (1/2,1]: 2*x - 1; piece (1,2]: 2"),
            pw("piece (0,1/2]: 3/2; piece (1/2,1]: x; piece (1,2]: 3/2"),
            pw("piece (0,1/2]: 5/4; piece (1/2,1]: x; piece (1,2]: 5/4"),
        )
        .unwrap()
    }

    fn ex16() -> MapTriple {
        let swap = pw("piece [0,0]: 1; piece [1,1]: 0");
        let dom = Domain::new(vec![Interval::point(0.0).unwrap(), Interval::point(1.0).unwrap()]).unwrap();
        MapTriple::new(
            MetricSpace::usual(dom),
            swap.clone(),
            swap,
            pw("piece [0,0]: 0; piece [1,1]: 1"),
        )
        .unwrap()
    }

    fn remark32() -> MapTriple {
        let s = pw("piece [0,inf): x/(1+x)");
        MapTriple::new(
            MetricSpace::usual(Interval::new(0.0, f64::INFINITY, true, false).unwrap()),
            pw("piece [0,inf): x"),
            s.clone(),
            s,
        )
        .unwrap()
    }

    fn identity() -> MapTriple {
        let id = pw("piece [0,1]: x");
        MapTriple::new(
            MetricSpace::usual(Interval::closed(0.0, 1.0).unwrap()),
            id.clone(),
            id.clone(),
            id,
        )
        .unwrap()
    }

    #[test]
    fn ex34_orbit_follows_the_closed_form() {
        let tr = build_orbit(&ex34(), 0.75, &OrbitOptions::default()).unwrap();
        for s in &tr.steps {
            let expected = 1.0 - 2f64.powi(1 - s.n as i32) * 0.25;
            assert!((s.ax - expected).abs() <= 1e-12, "n = {}", s.n);
        }
        assert!(tr.steps.windows(2).all(|w| w[1].ax > w[0].ax));
        assert!(matches!(
            tr.termination,
            Termination::Converged {
                constant_tail: false,
                ..
            }
        ));
    }

    #[test]
    fn orbit_alternates_and_inverts_a() {
        let tr = ex34();
        let o = build_orbit(&tr, 0.6, &OrbitOptions::default()).unwrap();
        let mut prev = 0.6;
        for s in &o.steps {
            let map = if s.n % 2 == 1 { &tr.s } else { &tr.t };
            assert_eq!(s.applied, if s.n % 2 == 1 { Applied::S } else { Applied::T });
            assert_eq!(s.ax, map.eval(prev).unwrap());
            assert!((tr.a.eval(s.x).unwrap() - s.ax).abs() <= 1e-12);
            prev = s.x;
        }
    }

    #[test]
    fn ex16_oscillates_between_zero_and_one() {
        let tr = build_orbit(&ex16(), 0.0, &OrbitOptions::default()).unwrap();
        let ax: Vec<f64> = tr.steps.iter().map(|s| s.ax).collect();
        assert_eq!(&ax[..7], &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        match tr.termination {
            Termination::Oscillating { period, limit_points } => {
                assert_eq!(period, 4);
                assert_eq!(limit_points, vec![0.0, 1.0]);
            }
            t => panic!("{t}"),
        }
    }

    #[test]
    fn ex33_from_one_stalls_at_five_sixteenths() {
        let tr = build_orbit(&ex33(), 1.0, &OrbitOptions::default()).unwrap();
        assert_eq!(tr.steps.len(), 1);
        assert_eq!(tr.steps[0].ax, 3.0 / 8.0);
        assert_eq!(tr.steps[0].x, 5.0 / 16.0);
        match tr.termination {
            Termination::Stalled { n, value, .. } => {
                assert_eq!(n, 2);
                assert_eq!(value, 5.0 / 16.0);
            }
            t => panic!("{t}"),
        }
    }

    #[test]
    fn ex33_reaches_one_third_from_reachable_starts() {
        for x0 in [1.0 / 6.0, 0.5] {
            let r = solve_common_fixed_point(&ex33(), x0, 1e-9, 100, None).unwrap();
            assert_eq!(r.candidate, Some(1.0 / 3.0), "x0 = {x0}: {}", r.reason);
            assert!(matches!(
                r.trace.termination,
                Termination::Converged {
                    constant_tail: true,
                    ..
                }
            ));
        }
    }

    #[test]
    fn solve_examples() {
        let r = solve_common_fixed_point(&ex34(), 0.75, 1e-9, DEFAULT_MAX_N, Some(&phi("piece [0,inf): x/2"))).unwrap();
        let u = r.candidate.unwrap();
        assert!((u - 1.0).abs() <= 1e-9);
        assert!(r.residuals.unwrap().max() <= 1e-9);
        assert!(r.iterations <= 60);
        assert_eq!(r.decay_ok, Some(true));

        let r = solve_common_fixed_point(&ex16(), 0.0, 1e-9, DEFAULT_MAX_N, None).unwrap();
        assert_eq!(r.candidate, None);
        assert_eq!(r.trace.termination.kind(), "oscillating");
    }

    #[test]
    fn remark_orbit_is_slow() {
        let tr = remark32();
        let r = solve_common_fixed_point(&tr, 1.0, DEFAULT_TOL_FIX, DEFAULT_MAX_N, None).unwrap();
        assert_eq!(r.candidate, None);
        assert_eq!(r.trace.termination.kind(), "budget");
        for s in r.trace.steps.iter().take(50) {
            assert!((s.ax - 1.0 / (s.n as f64 + 1.0)).abs() < 1e-12);
        }
        assert!(r.residuals.unwrap().s > DEFAULT_TOL_FIX);

        let r = solve_common_fixed_point(&tr, 1.0, 1e-4, 100_000, None).unwrap();
        let u = r.candidate.unwrap();
        assert!(u.abs() <= 1e-2, "{u}");
    }

    #[test]
    fn decay_examples() {
        let o = build_orbit(&ex34(), 0.75, &OrbitOptions::default()).unwrap();
        assert!(verify_decay(&o, &phi("piece [0,inf): x/2"), 1e-12).unwrap().is_pass());
        let r = verify_decay(&o, &phi("piece [0,inf): x/4"), 1e-12).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.value("n"), Some(2.0));

        let c = build_orbit(&ex33(), 0.5, &OrbitOptions::default()).unwrap();
        assert!(verify_decay(&c, &phi("piece [0,inf): x/2"), 1e-12).unwrap().is_pass());

        let short = OrbitTrace {
            x0: 0.0,
            steps: o.steps[..2].to_vec(),
            termination: Termination::Budget { period: None },
        };
        assert!(verify_decay(&short, &phi("piece [0,inf): x/2"), 0.0).is_err());
    }

    #[test]
    fn uniqueness_examples() {
        let opts = CheckOptions::default();
        let f = InequalityForm::PhiRational(phi("piece [0,inf): x/2"));
        assert!(verify_uniqueness_pairwise(&identity(), 0.2, 0.7, &f, &opts)
            .unwrap()
            .is_pass());
        let p = InequalityForm::PhiProduct(phi("piece [0,inf): x/2"));
        assert!(verify_uniqueness_pairwise(&identity(), 0.2, 0.7, &p, &opts)
            .unwrap()
            .is_pass());
        let r = verify_uniqueness_pairwise(&ex34(), 1.0, 0.8, &f, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.details.get("point"), Some(&"v".into()));
    }

    #[test]
    fn trace_csv() {
        let o = build_orbit(&ex33(), 0.5, &OrbitOptions::default()).unwrap();
        let mut buf = Vec::new();
        o.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,x_n,Ax_n,applied_map,gap"));
        assert!(lines.next().unwrap().starts_with("1,"));
        assert!(text.trim_end().ends_with(','), "{text}");
    }

    #[test]
    fn start_outside_the_space_is_an_error() {
        assert!(matches!(
            build_orbit(&ex33(), 0.0, &OrbitOptions::default()),
            Err(Error::Domain { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn ex34_converges_from_the_linear_part(x0 in 0.5001f64..0.9999) {
                let r = solve_common_fixed_point(&ex34(), x0, 1e-9, 200, None).unwrap();
                prop_assert!((r.candidate.unwrap() - 1.0).abs() <= 1e-9);
                let ax: Vec<f64> = r.trace.steps.iter().map(|s| s.ax).collect();
                let tail = SequenceTrace::new(ax[ax.len() - DEFAULT_WINDOW..].to_vec());
                prop_assert!(tail_diameter(&tail, 0) <= 2e-9);
            }

            #[test]
            fn preimages_reproduce_images(x0 in 0.001f64..1.0) {
                let tr = ex33();
                let o = build_orbit(&tr, x0, &OrbitOptions::default()).unwrap();
                for s in &o.steps {
                    prop_assert!((tr.a.eval(s.x).unwrap() - s.ax).abs() <= 1e-12);
                }
            }
        }
    }
}
