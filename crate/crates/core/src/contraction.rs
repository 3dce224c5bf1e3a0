//! Contractive inequalities for a triple `(A, S, T)` and grid sweeps that
//! look for violating pairs.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsl::{InverseOptions, PiecewiseFn};
use crate::error::{Error, Result};
use crate::metric::{Interval, MetricSpace};
use crate::phi::PhiSpec;
use crate::report::{CheckReport, Fields};

/// Threshold below which `d(Ax, Ay)` counts as zero.
pub const TOL_ZERO: f64 = 1e-10;

/// Offsets placed around every breakpoint when building sweep grids.
pub const BOUNDARY_OFFSETS: [f64; 2] = [1e-12, 1e-3];

/// Three selfmaps of a metric space.
#[derive(Debug, Clone)]
pub struct MapTriple {
    pub space: MetricSpace,
    pub a: PiecewiseFn,
    pub s: PiecewiseFn,
    pub t: PiecewiseFn,
    pub inverse: InverseOptions,
}

/// Points at which selfmap structure is probed when a triple is built.
const STRUCTURE_PROBES: usize = 257;

impl MapTriple {
    /// Checks on a sampled grid that each map is defined on the space and
    /// maps it into itself.
    pub fn new(space: MetricSpace, a: PiecewiseFn, s: PiecewiseFn, t: PiecewiseFn) -> Result<Self> {
        let triple = MapTriple {
            space,
            a,
            s,
            t,
            inverse: InverseOptions::default(),
        };
        let mut probes = triple.space.domain().grid(STRUCTURE_PROBES);
        probes.extend(triple.breakpoints());
        for x in probes.into_iter().filter(|&x| triple.space.contains(x)) {
            for (name, f) in [("A", &triple.a), ("S", &triple.s), ("T", &triple.t)] {
                if !f.contains(x) {
                    return Err(Error::Structure(format!("{name} is not defined at {x}")));
                }
                let v = f.eval(x)?;
                if !triple.space.domain().contains_exact(v) {
                    return Err(Error::Structure(format!(
                        "{name}({x}) = {v} leaves the space {}",
                        triple.space.domain()
                    )));
                }
            }
        }
        Ok(triple)
    }

    pub fn with_inverse(mut self, inverse: InverseOptions) -> Self {
        self.inverse = inverse;
        self
    }

    /// Breakpoints of the three maps and finite domain endpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = [&self.a, &self.s, &self.t]
            .iter()
            .flat_map(|f| f.breakpoints())
            .collect();
        for p in self.space.domain().parts() {
            pts.push(p.lo);
            if p.hi.is_finite() {
                pts.push(p.hi);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn images(&self, x: f64, y: f64) -> Result<Images> {
        self.space.ensure_contains("check_pair", x)?;
        self.space.ensure_contains("check_pair", y)?;
        Ok(Images {
            x,
            y,
            ax: self.a.eval(x)?,
            ay: self.a.eval(y)?,
            sx: self.s.eval(x)?,
            sy: self.s.eval(y)?,
            ty: self.t.eval(y)?,
        })
    }
}

struct Images {
    x: f64,
    y: f64,
    ax: f64,
    ay: f64,
    sx: f64,
    sy: f64,
    ty: f64,
}

/// The three entries of the max in the rational inequalities, with `A`,
/// `S`, `T` replaced as the form requires.
struct Terms {
    lhs: f64,
    daa: f64,
    p1: f64,
    p2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InequalityForm {
    /// `d(Sx,Ty) <= alpha d(x,Sx) d(y,Ty) / d(x,y) + beta d(x,y)`, `x != y`.
    JaggiTwoMap {
        alpha: f64,
        beta: f64,
    },
    /// `alpha d(Ax,Ay) + beta P1 / d(Ax,Ay) + gamma P2 / d(Ax,Ay)`.
    PhaneendraLinear {
        alpha: f64,
        beta: f64,
        gamma: f64,
    },
    PhiRational(PhiSpec),
    /// The pair `(S, A)`: `T` is replaced by `S`.
    PhiRationalTwoMap(PhiSpec),
    /// `S` alone: `A` is the identity and `T` is `S`.
    PhiRationalSingle(PhiSpec),
    LambdaMax(f64),
    /// `d(Sx,Ty) d(Ax,Ay) <= phi(max{d(Ax,Ay)^2, P1, P2})`, no zero branch.
    PhiProduct(PhiSpec),
}

impl InequalityForm {
    pub fn name(&self) -> &'static str {
        match self {
            InequalityForm::JaggiTwoMap { .. } => "jaggi-two-map",
            InequalityForm::PhaneendraLinear { .. } => "phaneendra-linear",
            InequalityForm::PhiRational(_) => "phi-rational",
            InequalityForm::PhiRationalTwoMap(_) => "phi-rational-two-map",
            InequalityForm::PhiRationalSingle(_) => "phi-rational-single",
            InequalityForm::LambdaMax(_) => "lambda-max",
            InequalityForm::PhiProduct(_) => "phi-product",
        }
    }

    /// Parameter constraints of each form.
    pub fn validate(&self) -> Result<()> {
        let nonneg = |v: f64, what: &str| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Argument(format!("{what} must be nonnegative, got {v}")))
            }
        };
        match self {
            InequalityForm::JaggiTwoMap { alpha, beta } => {
                nonneg(*alpha, "alpha")?;
                nonneg(*beta, "beta")?;
                if alpha + beta >= 1.0 {
                    return Err(Error::Argument(format!(
                        "alpha + beta must be < 1, got {}",
                        alpha + beta
                    )));
                }
            }
            InequalityForm::PhaneendraLinear { alpha, beta, gamma } => {
                nonneg(*alpha, "alpha")?;
                nonneg(*beta, "beta")?;
                nonneg(*gamma, "gamma")?;
                if alpha + beta >= 1.0 || alpha + gamma >= 1.0 {
                    return Err(Error::Argument(format!(
                        "need alpha + beta < 1 and alpha + gamma < 1, got alpha={alpha} beta={beta} gamma={gamma}"
                    )));
                }
            }
            InequalityForm::LambdaMax(l) => {
                if !(0.0..1.0).contains(l) {
                    return Err(Error::Argument(format!("lambda must lie in [0,1), got {l}")));
                }
            }
            InequalityForm::PhiRational(p)
            | InequalityForm::PhiRationalTwoMap(p)
            | InequalityForm::PhiRationalSingle(p)
            | InequalityForm::PhiProduct(p) => {
                if !p.is_validated() {
                    return Err(Error::Argument(format!("phi {} has not been validated", p.body())));
                }
            }
        }
        Ok(())
    }

    fn phi(&self) -> Option<&PhiSpec> {
        match self {
            InequalityForm::PhiRational(p)
            | InequalityForm::PhiRationalTwoMap(p)
            | InequalityForm::PhiRationalSingle(p)
            | InequalityForm::PhiProduct(p) => Some(p),
            _ => None,
        }
    }

    fn terms(&self, tr: &MapTriple, im: &Images) -> Terms {
        let d = |a: f64, b: f64| tr.space.d(a, b);
        let (ax, ay, sx, ty) = match self {
            InequalityForm::PhiRationalTwoMap(_) => (im.ax, im.ay, im.sx, im.sy),
            InequalityForm::PhiRationalSingle(_) => (im.x, im.y, im.sx, im.sy),
            InequalityForm::JaggiTwoMap { .. } => (im.x, im.y, im.sx, im.ty),
            _ => (im.ax, im.ay, im.sx, im.ty),
        };
        Terms {
            lhs: d(sx, ty),
            daa: d(ax, ay),
            p1: d(ax, sx) * d(ay, ty),
            p2: d(ax, ty) * d(ay, sx),
        }
    }
}

impl fmt::Display for InequalityForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InequalityForm::JaggiTwoMap { alpha, beta } => {
                write!(f, "{}(alpha={alpha}, beta={beta})", self.name())
            }
            InequalityForm::PhaneendraLinear { alpha, beta, gamma } => {
                write!(f, "{}(alpha={alpha}, beta={beta}, gamma={gamma})", self.name())
            }
            InequalityForm::LambdaMax(l) => write!(f, "{}(lambda={l})", self.name()),
            _ => write!(
                f,
                "{}(phi={})",
                self.name(),
                self.phi().map(|p| p.body().to_string()).unwrap_or_default()
            ),
        }
    }
}

/// What to do with pairs where `d(Ax, Ay)` vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroMode {
    /// Require `d(Sx, Ty) = 0` there.
    #[default]
    Strict,
    /// Skip such pairs.
    Lenient,
}

impl fmt::Display for ZeroMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZeroMode::Strict => "strict",
            ZeroMode::Lenient => "lenient",
        })
    }
}

impl std::str::FromStr for ZeroMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(ZeroMode::Strict),
            "lenient" => Ok(ZeroMode::Lenient),
            other => Err(Error::Argument(format!("unknown zero mode {other:?} (strict|lenient)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub tol: f64,
    pub tol_zero: f64,
    pub zero_mode: ZeroMode,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            tol: 1e-12,
            tol_zero: TOL_ZERO,
            zero_mode: ZeroMode::Strict,
        }
    }
}

impl CheckOptions {
    pub fn with_mode(zero_mode: ZeroMode) -> Self {
        CheckOptions {
            zero_mode,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStatus {
    Holds,
    Violated,
    ZeroBranchViolated,
    NotApplicable,
}

impl PairStatus {
    pub fn is_violation(self) -> bool {
        matches!(self, PairStatus::Violated | PairStatus::ZeroBranchViolated)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PairStatus::Holds => "holds",
            PairStatus::Violated => "violated",
            PairStatus::ZeroBranchViolated => "zero_branch_violated",
            PairStatus::NotApplicable => "not_applicable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairVerdict {
    pub status: PairStatus,
    pub lhs: f64,
    pub rhs: f64,
    pub x: f64,
    pub y: f64,
}

/// Right-hand side of the inequality at `(x, y)`. Rational forms with
/// `d(Ax, Ay) <= TOL_ZERO` (or `d(x, y)` for the two-map Jaggi form) have no
/// value there and return [`Error::ZeroDenominator`].
pub fn rhs_value(form: &InequalityForm, triple: &MapTriple, x: f64, y: f64) -> Result<f64> {
    rhs_with(form, triple, x, y, TOL_ZERO)
}

fn rhs_with(form: &InequalityForm, triple: &MapTriple, x: f64, y: f64, tol_zero: f64) -> Result<f64> {
    form.validate()?;
    let im = triple.images(x, y)?;
    let tm = form.terms(triple, &im);
    let m = tm.daa.max(tm.p1 / tm.daa).max(tm.p2 / tm.daa);
    let zero = || Error::ZeroDenominator { x, y };
    match form {
        InequalityForm::PhiProduct(phi) => phi.eval(tm.daa.powi(2).max(tm.p1).max(tm.p2)),
        _ if tm.daa <= tol_zero => Err(zero()),
        InequalityForm::JaggiTwoMap { alpha, beta } => Ok(alpha * tm.p1 / tm.daa + beta * tm.daa),
        InequalityForm::PhaneendraLinear { alpha, beta, gamma } => {
            Ok(alpha * tm.daa + beta * tm.p1 / tm.daa + gamma * tm.p2 / tm.daa)
        }
        InequalityForm::LambdaMax(l) => Ok(l * m),
        InequalityForm::PhiRational(phi)
        | InequalityForm::PhiRationalTwoMap(phi)
        | InequalityForm::PhiRationalSingle(phi) => phi.eval(m),
    }
}

/// Left-hand side: `d(Sx, Ty)` (with the form's substitutions), times
/// `d(Ax, Ay)` for the product form.
pub fn lhs_value(form: &InequalityForm, triple: &MapTriple, x: f64, y: f64) -> Result<f64> {
    let im = triple.images(x, y)?;
    let tm = form.terms(triple, &im);
    Ok(match form {
        InequalityForm::PhiProduct(_) => tm.lhs * tm.daa,
        _ => tm.lhs,
    })
}

pub fn check_pair(
    form: &InequalityForm,
    triple: &MapTriple,
    x: f64,
    y: f64,
    opts: &CheckOptions,
) -> Result<PairVerdict> {
    let lhs = lhs_value(form, triple, x, y)?;
    let verdict = |status, rhs| PairVerdict { status, lhs, rhs, x, y };
    match rhs_with(form, triple, x, y, opts.tol_zero) {
        Ok(rhs) => {
            let status = if lhs <= rhs + opts.tol {
                PairStatus::Holds
            } else {
                PairStatus::Violated
            };
            Ok(verdict(status, rhs))
        }
        Err(Error::ZeroDenominator { .. }) => {
            // the two-map Jaggi form is only stated for x != y
            if matches!(form, InequalityForm::JaggiTwoMap { .. }) {
                return Ok(verdict(PairStatus::NotApplicable, 0.0));
            }
            Ok(match opts.zero_mode {
                ZeroMode::Lenient => verdict(PairStatus::NotApplicable, 0.0),
                ZeroMode::Strict if lhs <= opts.tol_zero => verdict(PairStatus::Holds, 0.0),
                ZeroMode::Strict => verdict(PairStatus::ZeroBranchViolated, 0.0),
            })
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct RowSummary {
    counts: [usize; 4],
    first: Option<PairVerdict>,
    worst_excess: f64,
}

fn status_index(s: PairStatus) -> usize {
    s as usize
}

/// Checks every ordered pair of `grid`, including the diagonal. The
/// witness is the first violating pair in lexicographic grid order.
pub fn sweep_grid(form: &InequalityForm, triple: &MapTriple, grid: &[f64], opts: &CheckOptions) -> Result<CheckReport> {
    form.validate()?;
    if grid.len() < 2 {
        return Err(Error::Argument(format!(
            "sweep needs at least 2 points, got {}",
            grid.len()
        )));
    }
    for &x in grid {
        triple.space.ensure_contains("sweep_grid", x)?;
    }
    let rows = grid
        .par_iter()
        .map(|&x| {
            let mut row = RowSummary::default();
            for &y in grid {
                let v = check_pair(form, triple, x, y, opts)?;
                row.counts[status_index(v.status)] += 1;
                if v.status == PairStatus::Violated {
                    row.worst_excess = row.worst_excess.max(v.lhs - v.rhs);
                }
                if v.status.is_violation() && row.first.is_none() {
                    row.first = Some(v);
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut counts = [0usize; 4];
    let mut worst: f64 = 0.0;
    for r in &rows {
        for (c, k) in counts.iter_mut().zip(r.counts) {
            *c += k;
        }
        worst = worst.max(r.worst_excess);
    }
    let first = rows.iter().find_map(|r| r.first);
    let check = format!("sweep {form}");
    let mut report = match first {
        None => CheckReport::pass(check),
        Some(v) => CheckReport::fail(
            check,
            Fields::new()
                .with("x", v.x)
                .with("y", v.y)
                .with("status", v.status.as_str())
                .with("lhs", v.lhs)
                .with("rhs", v.rhs),
        ),
    };
    report = report
        .with("zero_mode", opts.zero_mode.to_string())
        .with("grid_points", grid.len())
        .with("pairs", grid.len() * grid.len())
        .with("holds", counts[0])
        .with("violated", counts[1])
        .with("zero_branch_violated", counts[2])
        .with("not_applicable", counts[3])
        .with("max_excess", worst);
    Ok(report)
}

/// `n` uniform domain points plus every breakpoint and finite endpoint
/// together with the points `BOUNDARY_OFFSETS` away on either side, kept
/// when inside the space and within `range`.
pub fn sweep_points(triple: &MapTriple, n: usize, range: Option<&Interval>) -> Vec<f64> {
    let mut pts = match range {
        Some(r) => {
            let (lo, hi) = r.sampling_bounds();
            crate::metric::linspace(lo, hi, n)
        }
        None => triple.space.domain().grid(n),
    };
    for b in triple.breakpoints() {
        pts.push(b);
        for off in BOUNDARY_OFFSETS {
            pts.push(b - off);
            pts.push(b + off);
        }
    }
    let in_range = |x: f64| range.is_none_or(|r| r.contains(x));
    let mut pts: Vec<f64> = pts
        .into_iter()
        .filter(|&x| {
            in_range(x)
                && triple.space.contains(x)
                && triple.a.contains(x)
                && triple.s.contains(x)
                && triple.t.contains(x)
        })
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_piecewise;
    use crate::metric::{Domain, Interval};

    fn pw(t: &str) -> PiecewiseFn {
        parse_piecewise(t).unwrap()
    }

    fn phi(t: &str) -> PhiSpec {
        PhiSpec::parse_validated(t).unwrap()
    }

    pub(crate) fn ex33() -> MapTriple {
        MapTriple::new(
            MetricSpace::usual(Interval::new(0.0, 1.0, false, true).unwrap()),
            pw("piece (0,1/3]: 1 - 2*x; piece (1/3,1]: 1/6"),
            pw("piece (0,1/3]: x; piece (1/3,1): 1/3; piece [1,1]: 3/8"),
            pw("piece (0,1/3]: x; piece (1/3,1): 1/3; piece [1,1]: 5/12"),
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

    fn identity_triple() -> MapTriple {
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
    fn triple_must_be_selfmaps() {
        let e = MapTriple::new(
            MetricSpace::usual(Interval::closed(0.0, 1.0).unwrap()),
            pw("piece [0,1]: x"),
            pw("piece [0,1]: 2*x"),
            pw("piece [0,1]: x"),
        )
        .unwrap_err();
        assert!(matches!(e, Error::Structure(_)), "{e:?}");
        let e = MapTriple::new(
            MetricSpace::usual(Interval::closed(0.0, 1.0).unwrap()),
            pw("piece [0,1/2]: x"),
            pw("piece [0,1]: x"),
            pw("piece [0,1]: x"),
        )
        .unwrap_err();
        assert!(matches!(e, Error::Structure(_)));
    }

    #[test]
    fn rational_rhs_hand_value() {
        let f = InequalityForm::PhiRational(phi("piece [0,inf): x/2"));
        let rhs = rhs_value(&f, &ex33(), 0.1, 0.2).unwrap();
        assert!((rhs - 0.75).abs() < 1e-12, "{rhs}");
        let lhs = lhs_value(&f, &ex33(), 0.1, 0.2).unwrap();
        assert!((lhs - 0.1).abs() < 1e-12);
    }

    #[test]
    fn single_map_form() {
        let f = InequalityForm::PhiRationalSingle(phi("piece [0,inf): x/(1+x)"));
        let v = check_pair(&f, &remark32(), 1.0, 2.0, &CheckOptions::default()).unwrap();
        assert!(v.rhs >= 0.5);
        assert!((v.lhs - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(v.status, PairStatus::Holds);
    }

    #[test]
    fn identity_is_not_contractive() {
        let f = InequalityForm::PhiRational(phi("piece [0,inf): x/2"));
        let v = check_pair(&f, &identity_triple(), 0.2, 0.7, &CheckOptions::default()).unwrap();
        assert_eq!(v.status, PairStatus::Violated);
        assert!((v.rhs - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_branch() {
        let f = InequalityForm::PhiRational(phi("piece [0,inf): x/2"));
        let strict = CheckOptions::default();
        let lenient = CheckOptions::with_mode(ZeroMode::Lenient);
        let v = check_pair(&f, &ex33(), 0.5, 1.0, &strict).unwrap();
        assert_eq!(v.status, PairStatus::ZeroBranchViolated);
        assert!((v.lhs - 1.0 / 12.0).abs() < 1e-12);
        assert_eq!(
            check_pair(&f, &ex33(), 0.5, 1.0, &lenient).unwrap().status,
            PairStatus::NotApplicable
        );
        assert!(matches!(
            rhs_value(&f, &ex33(), 0.5, 1.0),
            Err(Error::ZeroDenominator { .. })
        ));

        let lin = InequalityForm::PhaneendraLinear {
            alpha: 1.0 / 3.0,
            beta: 1.0 / 3.0,
            gamma: 1.0 / 3.0,
        };
        assert_eq!(
            check_pair(&lin, &ex16(), 0.0, 0.0, &strict).unwrap().status,
            PairStatus::ZeroBranchViolated
        );
        assert_eq!(
            check_pair(&lin, &ex16(), 0.0, 0.0, &lenient).unwrap().status,
            PairStatus::NotApplicable
        );
    }

    #[test]
    fn diagonal_with_equal_maps_holds() {
        let f = InequalityForm::PhiRationalTwoMap(phi("piece [0,inf): x/2"));
        for x in [0.1, 0.5, 0.9] {
            let v = check_pair(&f, &identity_triple(), x, x, &CheckOptions::default()).unwrap();
            assert_eq!(v.status, PairStatus::Holds);
        }
    }

    #[test]
    fn jaggi_is_not_applicable_on_the_diagonal() {
        let f = InequalityForm::JaggiTwoMap { alpha: 0.2, beta: 0.5 };
        let v = check_pair(&f, &remark32(), 1.0, 1.0, &CheckOptions::default()).unwrap();
        assert_eq!(v.status, PairStatus::NotApplicable);
        // x/(1+x) is 1-Lipschitz with slope below 1/2 beyond sqrt(2)-1
        let v = check_pair(&f, &remark32(), 2.0, 3.0, &CheckOptions::default()).unwrap();
        assert_eq!(v.status, PairStatus::Holds);
    }

    #[test]
    fn product_form_has_no_zero_branch() {
        let f = InequalityForm::PhiProduct(phi("piece [0,inf): x/2"));
        // d(Ax,Ay) = 0 zeroes the lhs while the product terms stay positive
        let v = check_pair(&f, &ex33(), 0.5, 1.0, &CheckOptions::default()).unwrap();
        assert_eq!(v.status, PairStatus::Holds);
        assert_eq!(v.lhs, 0.0);
        assert!(v.rhs > 0.0);
    }

    #[test]
    fn parameter_constraints() {
        assert!(InequalityForm::LambdaMax(1.0).validate().is_err());
        assert!(InequalityForm::PhaneendraLinear {
            alpha: 0.5,
            beta: 0.5,
            gamma: 0.1
        }
        .validate()
        .is_err());
        assert!(InequalityForm::JaggiTwoMap { alpha: -0.1, beta: 0.5 }
            .validate()
            .is_err());
        let raw = PhiSpec::parse("piece [0,inf): x/2").unwrap();
        assert!(InequalityForm::PhiRational(raw).validate().is_err());
    }

    #[test]
    fn remark_sweeps_separate_the_two_results() {
        let tr = remark32();
        let grid = sweep_points(&tr, 200, Some(&Interval::closed(0.0, 10.0).unwrap()));
        let opts = CheckOptions::default();
        let f = InequalityForm::PhiRationalTwoMap(phi("piece [0,inf): x/(1+x)"));
        let r = sweep_grid(&f, &tr, &grid, &opts).unwrap();
        assert!(r.is_pass(), "{r}");
        for lambda in [0.5, 0.9, 0.99] {
            let r = sweep_grid(&InequalityForm::LambdaMax(lambda), &tr, &grid, &opts).unwrap();
            assert_eq!(r.verdict, crate::report::Verdict::Fail);
            let (x, y) = (r.value("x").unwrap(), r.value("y").unwrap());
            assert_eq!(x.min(y), 0.0);
            assert!(x.max(y) <= 1.0 / lambda - 1.0, "{r}");
        }
    }

    #[test]
    fn ex34_lenient_sweep_on_the_linear_part() {
        let tr = MapTriple::new(
            MetricSpace::usual(Interval::new(0.0, 2.0, false, true).unwrap()),
            pw("piece (0,1/2]: 2; piece (1/2,1]: 2*x - 1; piece (1,2]: 2"),
            pw("piece (0,1/2]: 3/2; piece (1/2,1]: x; piece (1,2]: 3/2"),
            pw("piece (0,1/2]: 5/4; piece (1/2,1]: x; piece (1,2]: 5/4"),
        )
        .unwrap();
        let grid: Vec<f64> = (501..=1000).map(|k| k as f64 / 1000.0).collect();
        let f = InequalityForm::PhiRational(phi("piece [0,inf): x/2"));
        let r = sweep_grid(&f, &tr, &grid, &CheckOptions::with_mode(ZeroMode::Lenient)).unwrap();
        assert!(r.is_pass(), "{r}");
        let r = sweep_grid(&f, &tr, &grid, &CheckOptions::default()).unwrap();
        assert!(r.is_pass(), "A is injective there, so strict mode agrees: {r}");
    }

    #[test]
    fn sweep_reports_counts_and_first_witness() {
        let f = InequalityForm::PhiRational(phi("piece [0,inf): x/2"));
        let grid = [0.25, 0.5, 1.0];
        let r = sweep_grid(&f, &ex33(), &grid, &CheckOptions::default()).unwrap();
        assert_eq!(r.details.num("pairs"), Some(9.0));
        assert_eq!(r.value("x"), Some(0.5));
        assert_eq!(r.value("y"), Some(1.0));
        assert!(sweep_grid(&f, &ex33(), &[0.5], &CheckOptions::default()).is_err());
        assert!(matches!(
            sweep_grid(&f, &ex33(), &[0.5, 1.5], &CheckOptions::default()),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn sweep_points_hug_breakpoints() {
        let pts = sweep_points(&ex33(), 20, None);
        let third = 1.0 / 3.0;
        assert!(pts.contains(&third));
        assert!(pts.contains(&(third + 1e-3)));
        assert!(pts.contains(&1e-12));
        assert!(!pts.contains(&0.0));
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn linear_phi_matches_lambda_max(x in 0.001f64..1.0, y in 0.001f64..1.0, l in 0usize..10) {
                let lambda = l as f64 / 10.0;
                let tr = ex33();
                let a = InequalityForm::PhiRational(phi(&format!("piece [0,inf): {lambda}*x")));
                let b = InequalityForm::LambdaMax(lambda);
                let opts = CheckOptions::default();
                let (va, vb) = (check_pair(&a, &tr, x, y, &opts).unwrap(), check_pair(&b, &tr, x, y, &opts).unwrap());
                prop_assert_eq!(va.status, vb.status);
                prop_assert!((va.rhs - vb.rhs).abs() <= 1e-12 * va.rhs.max(1.0));
            }

            #[test]
            fn linear_rhs_is_bounded_by_the_coefficient_sum(
                x in 0.001f64..1.0, y in 0.001f64..1.0,
                alpha in 0.0f64..0.99, b in 0.0f64..1.0, g in 0.0f64..1.0,
            ) {
                let tr = ex33();
                let (beta, gamma) = (b * (0.999 - alpha), g * (0.999 - alpha));
                let lin = InequalityForm::PhaneendraLinear { alpha, beta, gamma };
                match (rhs_value(&lin, &tr, x, y), rhs_value(&InequalityForm::LambdaMax(0.5), &tr, x, y)) {
                    (Ok(r), Ok(half)) => {
                        let m = 2.0 * half;
                        prop_assert!(r <= (alpha + beta + gamma) * m * (1.0 + 1e-12));
                    }
                    (Err(Error::ZeroDenominator { .. }), Err(Error::ZeroDenominator { .. })) => {}
                    other => prop_assert!(false, "{:?}", other),
                }
            }

            #[test]
            fn pair_checks_are_ordered(x in 0.001f64..1.0) {
                // S and T differ at 1 only, so swapping the pair changes the lhs there
                let f = InequalityForm::PhiRational(phi("piece [0,inf): x/2"));
                let tr = ex33();
                let v = check_pair(&f, &tr, x, 1.0, &CheckOptions::default()).unwrap();
                let w = check_pair(&f, &tr, 1.0, x, &CheckOptions::default()).unwrap();
                let sx = tr.s.eval(x).unwrap();
                prop_assert!((v.lhs - (sx - 5.0 / 12.0).abs()).abs() < 1e-12);
                prop_assert!((w.lhs - (3.0 / 8.0 - tr.t.eval(x).unwrap()).abs()).abs() < 1e-12);
            }

            #[test]
            fn product_form_evaluates_everywhere(x in 0.001f64..1.0, y in 0.001f64..1.0) {
                let f = InequalityForm::PhiProduct(phi("piece [0,inf): x/2"));
                prop_assert!(rhs_value(&f, &ex33(), x, y).is_ok());
                prop_assert!(rhs_value(&f, &ex33(), x, x).is_ok());
            }
        }
    }
}
