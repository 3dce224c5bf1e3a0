//! Control functions `phi` for the rational contractive inequalities:
//! nondecreasing, `0 <= phi(t) < t` for `t > 0`, and the iterates
//! `phi^n(t)` tend to zero.

use num_traits::Zero;

use crate::dsl::{parse_piecewise, PiecewiseFn};
use crate::error::{Error, Result};
use crate::metric::{linspace, SequenceTrace};
use crate::report::{CheckReport, Fields, Verdict};

/// Default upper end of the validation grid.
pub const T_MAX: f64 = 100.0;

/// Floor on the iteration budget for `phi(t) = lambda * t`.
pub const GEOMETRIC_MIN_BUDGET: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct PhiSpec {
    body: PiecewiseFn,
    validated: bool,
    grid: Vec<f64>,
}

impl PhiSpec {
    pub fn new(body: PiecewiseFn) -> Self {
        PhiSpec {
            body,
            validated: false,
            grid: Vec::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(Self::new(parse_piecewise(text)?))
    }

    /// Parses and validates on [`default_grid`], failing with an argument
    /// error when the candidate is not in the class.
    pub fn parse_validated(text: &str) -> Result<Self> {
        let mut phi = Self::parse(text)?;
        let report = phi.validate(&default_grid(T_MAX), 0.0)?;
        if !report.is_pass() {
            return Err(Error::Argument(format!("phi {text:?} rejected: {report}")));
        }
        Ok(phi)
    }

    /// Runs [`validate_phi`] and marks `self` validated on a pass.
    pub fn validate(&mut self, grid: &[f64], tol: f64) -> Result<CheckReport> {
        let report = validate_phi(&self.body, grid, tol)?;
        self.validated = report.is_pass();
        self.grid = if self.validated { grid.to_vec() } else { Vec::new() };
        Ok(report)
    }

    pub fn is_validated(&self) -> bool {
        self.validated
    }

    pub fn validation_grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn body(&self) -> &PiecewiseFn {
        &self.body
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.body.eval(t)
    }

    /// `Some(lambda)` when every piece is `lambda * t` with one common
    /// `lambda`.
    pub fn linear_ratio(&self) -> Option<f64> {
        let mut ratio = None;
        for p in self.body.pieces() {
            let (m, c) = p.body().affine()?;
            if !c.is_zero() || ratio.is_some_and(|r| r != m) {
                return None;
            }
            ratio = Some(m);
        }
        ratio.map(|r| *r.numer() as f64 / *r.denom() as f64)
    }

    fn require_validated(&self) -> Result<()> {
        if self.validated {
            Ok(())
        } else {
            Err(Error::Argument(format!("phi {} has not been validated", self.body)))
        }
    }
}

/// Validation grid: log-spaced points from `1e-6` to `t_max` merged with a
/// uniform grid on `[0.01, 10]`.
pub fn default_grid(t_max: f64) -> Vec<f64> {
    let (a, b) = (1e-6f64.ln(), t_max.ln());
    let mut g: Vec<f64> = (0..=200).map(|i| (a + (b - a) * i as f64 / 200.0).exp()).collect();
    g.extend(linspace(0.01, 10.0_f64.min(t_max), 1000));
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Checks monotonicity (`phi(t_i) <= phi(t_j) + tol` for `t_i < t_j`),
/// `phi(t) >= 0` and the strict shrink `phi(t) < t` on every grid point.
/// The largest jump between neighbouring grid values is reported as a
/// continuity indicator only.
pub fn validate_phi(candidate: &PiecewiseFn, grid: &[f64], tol: f64) -> Result<CheckReport> {
    if grid.is_empty() {
        return Err(Error::Argument("validation grid is empty".into()));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::Argument(format!("tolerance must be nonnegative, got {tol}")));
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Argument(format!(
            "grid must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    if grid[0] <= 0.0 {
        return Err(Error::Argument(format!(
            "grid points must be positive, got {}",
            grid[0]
        )));
    }
    let values = grid
        .iter()
        .map(|&t| candidate.eval(t).map_err(|e| rename_op(e, "validate_phi")))
        .collect::<Result<Vec<_>>>()?;

    let check = "phi_class";
    if candidate.contains(0.0) {
        let v0 = candidate.eval(0.0)?;
        if v0 < 0.0 {
            return Ok(CheckReport::fail(
                check,
                Fields::new()
                    .with("condition", "nonnegative")
                    .with("t", 0.0)
                    .with("phi_t", v0),
            ));
        }
    }
    let mut max_so_far = (f64::NEG_INFINITY, 0.0);
    let mut max_jump: f64 = 0.0;
    for (i, (&t, &v)) in grid.iter().zip(&values).enumerate() {
        if v < 0.0 {
            return Ok(CheckReport::fail(
                check,
                Fields::new()
                    .with("condition", "nonnegative")
                    .with("t", t)
                    .with("phi_t", v),
            ));
        }
        if v >= t {
            return Ok(CheckReport::fail(
                check,
                Fields::new().with("condition", "shrink").with("t", t).with("phi_t", v),
            ));
        }
        if v + tol < max_so_far.0 {
            return Ok(CheckReport::fail(
                check,
                Fields::new()
                    .with("condition", "monotone")
                    .with("t_i", max_so_far.1)
                    .with("phi_t_i", max_so_far.0)
                    .with("t_j", t)
                    .with("phi_t_j", v),
            ));
        }
        if v > max_so_far.0 {
            max_so_far = (v, t);
        }
        if i > 0 {
            max_jump = max_jump.max((v - values[i - 1]).abs());
        }
    }
    Ok(CheckReport::pass(check)
        .with("grid_points", grid.len())
        .with("grid_min", grid[0])
        .with("grid_max", grid[grid.len() - 1])
        .with("max_adjacent_jump", max_jump))
}

fn rename_op(e: Error, op: &str) -> Error {
    match e {
        Error::Domain { point, domain, .. } => Error::Domain {
            op: op.to_string(),
            point,
            domain,
        },
        other => other,
    }
}

/// `[t0, phi(t0), ..., phi^n(t0)]`.
pub fn phi_iterates(phi: &PhiSpec, t0: f64, n: usize) -> Result<SequenceTrace> {
    phi.require_validated()?;
    check_start(t0)?;
    let mut terms = Vec::with_capacity(n + 1);
    let mut t = t0;
    terms.push(t);
    for _ in 0..n {
        t = phi.eval(t).map_err(|e| rename_op(e, "phi_iterates"))?;
        terms.push(t);
    }
    Ok(SequenceTrace::new(terms))
}

fn check_start(t0: f64) -> Result<()> {
    if t0 > 0.0 && t0.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "start value must be positive and finite, got {t0}"
        )))
    }
}

/// Iteration budget for driving `phi^n(t0)` below `tol`: the exact count
/// (at least [`GEOMETRIC_MIN_BUDGET`]) for `lambda * t`, otherwise
/// `2 * ceil(max(t0, 1) / tol)`, which covers `t / (1 + t)` with room for
/// rounding.
pub fn decay_budget(phi: &PhiSpec, t0: f64, tol: f64) -> usize {
    match phi.linear_ratio() {
        Some(l) if l <= 0.0 => GEOMETRIC_MIN_BUDGET,
        Some(l) if l < 1.0 => {
            let need = ((tol / t0).ln() / l.ln()).ceil().max(0.0) as usize;
            need.max(GEOMETRIC_MIN_BUDGET)
        }
        _ => (2.0 * (t0.max(1.0) / tol).ceil()) as usize,
    }
}

/// Streams `phi^n(t0)` until it drops to `tol`, without storing iterates.
pub fn check_decay(phi: &PhiSpec, t0: f64, tol: f64) -> Result<CheckReport> {
    phi.require_validated()?;
    check_start(t0)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let budget = decay_budget(phi, t0, tol);
    let check = "phi_decay";
    let mut t = t0;
    let mut n = 0usize;
    while t > tol {
        if n == budget {
            return Ok(CheckReport::fail(
                check,
                Fields::new().with("reason", "budget").with("n", n).with("value", t),
            )
            .with("t0", t0)
            .with("budget", budget));
        }
        let next = phi.eval(t).map_err(|e| rename_op(e, "check_decay"))?;
        if next >= t {
            return Ok(CheckReport::fail(
                check,
                Fields::new()
                    .with("reason", "not_decreasing")
                    .with("n", n)
                    .with("value", t),
            )
            .with("t0", t0));
        }
        t = next;
        n += 1;
    }
    Ok(CheckReport::new(check, Verdict::Pass)
        .with("t0", t0)
        .with("tol", tol)
        .with("iterations", n)
        .with("final", t)
        .with("budget", budget))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi(text: &str) -> PhiSpec {
        PhiSpec::parse_validated(text).unwrap()
    }

    #[test]
    fn class_membership_examples() {
        let grid = linspace(0.01, 10.0, 1000);
        let half = parse_piecewise("piece [0,inf): x/2").unwrap();
        assert!(validate_phi(&half, &grid, 1e-12).unwrap().is_pass());
        let frac = parse_piecewise("piece [0,inf): x/(1+x)").unwrap();
        assert!(validate_phi(&frac, &grid, 1e-12).unwrap().is_pass());
        let id = parse_piecewise("piece [0,inf): x").unwrap();
        let r = validate_phi(&id, &grid, 1e-12).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.value("t"), Some(0.01));
    }

    #[test]
    fn zero_map_is_in_the_class() {
        let zero = parse_piecewise("piece [0,inf): 0").unwrap();
        assert!(validate_phi(&zero, &default_grid(T_MAX), 0.0).unwrap().is_pass());
    }

    #[test]
    fn decreasing_candidate_fails_monotonicity() {
        let f = parse_piecewise("piece [0,1]: x/2; piece (1,inf): 1/4").unwrap();
        let r = validate_phi(&f, &[0.5, 1.0, 2.0], 0.0).unwrap();
        assert_eq!(r.witness.unwrap().get("condition"), Some(&"monotone".into()));
    }

    #[test]
    fn grid_outside_domain_is_a_domain_error() {
        let f = parse_piecewise("piece [0,1]: x/2").unwrap();
        assert!(matches!(validate_phi(&f, &[0.5, 2.0], 0.0), Err(Error::Domain { .. })));
        assert!(matches!(validate_phi(&f, &[0.5, 0.5], 0.0), Err(Error::Argument(_))));
        assert!(matches!(validate_phi(&f, &[0.0, 0.5], 0.0), Err(Error::Argument(_))));
    }

    #[test]
    fn iterate_examples() {
        let half = phi("piece [0,inf): x/2");
        let tr = phi_iterates(&half, 1.0, 10).unwrap();
        assert_eq!(tr.last(), Some(2f64.powi(-10)));
        assert!(phi_iterates(&half, 1.0, 40).unwrap().last().unwrap() <= 1e-9);
        let frac = phi("piece [0,inf): x/(1+x)");
        let tr = phi_iterates(&frac, 1.0, 9).unwrap();
        assert!((tr.last().unwrap() - 0.1).abs() < 1e-15);
        assert!(tr.terms.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn iterates_require_validation_and_stay_in_domain() {
        let raw = PhiSpec::parse("piece [0,inf): x/2").unwrap();
        assert!(matches!(phi_iterates(&raw, 1.0, 3), Err(Error::Argument(_))));
        let mut short = PhiSpec::parse("piece [1/2,1]: x - 1/4").unwrap();
        assert!(short.validate(&[0.5, 0.75, 1.0], 0.0).unwrap().is_pass());
        assert!(matches!(phi_iterates(&short, 1.0, 5), Err(Error::Domain { .. })));
    }

    #[test]
    fn budgets() {
        let half = phi("piece [0,inf): x/2");
        assert_eq!(half.linear_ratio(), Some(0.5));
        assert_eq!(decay_budget(&half, 1.0, 1e-9), 200);
        let slow = phi("piece [0,inf): 99/100*x");
        assert_eq!(decay_budget(&slow, 1.0, 1e-9), 2062);
        let frac = phi("piece [0,inf): x/(1+x)");
        assert_eq!(frac.linear_ratio(), None);
        assert_eq!(decay_budget(&frac, 0.5, 1e-3), 2000);
        assert_eq!(decay_budget(&frac, 4.0, 1e-3), 8000);
    }

    #[test]
    fn decay_of_the_rational_control_at_coarse_tolerance() {
        let frac = phi("piece [0,inf): x/(1+x)");
        let r = check_decay(&frac, 1.0, 1e-4).unwrap();
        assert!(r.is_pass());
        // phi^n(1) = 1 / (1 + n)
        assert_eq!(r.value("iterations"), Some(9999.0));
    }

    #[test]
    fn decay_of_a_non_member_fails() {
        let mut id = PhiSpec::parse("piece [0,inf): x").unwrap();
        id.validated = true;
        let r = check_decay(&id, 1.0, 1e-3).unwrap();
        assert_eq!(r.witness.unwrap().get("reason"), Some(&"not_decreasing".into()));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn iterates_decrease_to_zero(t0 in 1e-6f64..50.0, k in 0usize..2) {
                let p = phi(["piece [0,inf): x/2", "piece [0,inf): x/(1+x)"][k]);
                let tr = phi_iterates(&p, t0, 50).unwrap();
                prop_assert!(tr.terms.iter().all(|&t| t >= 0.0));
                prop_assert!(tr.terms.windows(2).all(|w| w[1] < w[0]));
            }

            #[test]
            fn linear_control_decays_within_budget(t0 in 1e-3f64..100.0, l in 0.0f64..0.95) {
                let lambda = (l * 100.0).round() / 100.0;
                let p = phi(&format!("piece [0,inf): {lambda}*x"));
                prop_assert!(check_decay(&p, t0, 1e-9).unwrap().is_pass());
            }
        }
    }
}
