//! Sequences of selfmaps `S_n` with a companion `A`: pointwise convergence
//! to a limit map, the common fixed points `u_n` of `(S_n, A)`, and whether
//! `u_n -> u` matches `Su = Au = u`.

use num_traits::{CheckedAdd, CheckedDiv, Zero};
use rayon::prelude::*;

use crate::contraction::MapTriple;
use crate::dsl::{Expr, PiecewiseFn, Rational};
use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::orbit::solve_common_fixed_point;
use crate::report::{CheckReport, Fields, Verdict};

/// `a + b/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coef {
    pub a: Rational,
    pub b: Rational,
}

impl Coef {
    pub fn new(a: Rational, b: Rational) -> Self {
        Coef { a, b }
    }

    pub fn constant(a: Rational) -> Self {
        Coef { a, b: Rational::zero() }
    }

    /// Value at `n`; `None` stands for the limit `n -> inf`.
    pub fn at(&self, n: Option<u32>) -> Result<Rational> {
        match n {
            None => Ok(self.a),
            Some(0) => Err(Error::Argument("family index starts at 1".into())),
            Some(n) => self
                .b
                .checked_div(&Rational::from_integer(n as i64))
                .and_then(|q| self.a.checked_add(&q))
                .ok_or_else(|| Error::Eval(format!("coefficient overflow at n = {n}"))),
        }
    }
}

/// Replacement body for one piece of the base function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Override {
    Constant(Coef),
    /// `slope * x + intercept`.
    Affine {
        slope: Coef,
        intercept: Coef,
    },
}

impl Override {
    fn body(&self, n: Option<u32>) -> Result<Expr> {
        Ok(match self {
            Override::Constant(c) => Expr::constant(c.at(n)?),
            Override::Affine { slope, intercept } => Expr::Add(
                Box::new(Expr::Mul(Box::new(Expr::constant(slope.at(n)?)), Box::new(Expr::Var))),
                Box::new(Expr::constant(intercept.at(n)?)),
            ),
        })
    }
}

#[derive(Debug, Clone)]
pub struct MapFamily {
    pub space: MetricSpace,
    base: PiecewiseFn,
    overrides: Vec<(usize, Override)>,
    pub companion: PiecewiseFn,
    declared_limit: Option<PiecewiseFn>,
}

impl MapFamily {
    pub fn new(
        space: MetricSpace,
        base: PiecewiseFn,
        overrides: Vec<(usize, Override)>,
        companion: PiecewiseFn,
    ) -> Result<Self> {
        let fam = MapFamily {
            space,
            base,
            overrides,
            companion,
            declared_limit: None,
        };
        // members 1 and 2 and the limit must all be selfmaps
        for n in [Some(1), Some(2), None] {
            fam.triple_for(n)?;
        }
        Ok(fam)
    }

    fn build(&self, n: Option<u32>) -> Result<PiecewiseFn> {
        let mut f = self.base.clone();
        for (idx, ov) in &self.overrides {
            f = f.with_piece_body(*idx, ov.body(n)?)?;
        }
        Ok(f)
    }

    pub fn member(&self, n: u32) -> Result<PiecewiseFn> {
        self.build(Some(n))
    }

    /// Claims `limit` as the pointwise limit instead of the map obtained by
    /// dropping the `b/n` parts.
    pub fn with_declared_limit(mut self, limit: PiecewiseFn) -> Result<Self> {
        MapTriple::new(self.space.clone(), self.companion.clone(), limit.clone(), limit.clone())?;
        self.declared_limit = Some(limit);
        Ok(self)
    }

    /// The declared limit, or every coefficient replaced by its constant
    /// part.
    pub fn limit_map(&self) -> Result<PiecewiseFn> {
        match &self.declared_limit {
            Some(f) => Ok(f.clone()),
            None => self.build(None),
        }
    }

    fn triple_for(&self, n: Option<u32>) -> Result<MapTriple> {
        let s = self.build(n)?;
        MapTriple::new(self.space.clone(), self.companion.clone(), s.clone(), s)
    }

    /// The triple `(A, S_n, S_n)`.
    pub fn triple(&self, n: u32) -> Result<MapTriple> {
        self.triple_for(Some(n))
    }
}

/// Doubling tail appended after `n_max` when checking pointwise convergence.
const TAIL_DOUBLINGS: u32 = 10;

/// For each grid point, the least `n0(x) <= n_max` from which
/// `|S_n(x) - S(x)| <= tol` holds for every `n <= n_max` and on a doubling
/// tail beyond it. Passes iff every grid point has one.
pub fn check_pointwise_convergence(family: &MapFamily, grid: &[f64], tol: f64, n_max: u32) -> Result<CheckReport> {
    if n_max == 0 {
        return Err(Error::Argument("n_max must be at least 1".into()));
    }
    let limit = family.limit_map()?;
    let mut ns: Vec<u32> = (1..=n_max).collect();
    ns.extend((1..=TAIL_DOUBLINGS).map(|k| n_max.saturating_mul(1 << k)));
    let members = ns.iter().map(|&n| family.member(n)).collect::<Result<Vec<_>>>()?;
    let check = "pointwise_convergence";
    let mut n0_max = 1u32;
    let mut worst_x = grid.first().copied().unwrap_or(f64::NAN);
    for &x in grid {
        family.space.ensure_contains(check, x)?;
        let s = limit.eval(x)?;
        let errs = members
            .iter()
            .map(|m| m.eval(x).map(|v| (v - s).abs()))
            .collect::<Result<Vec<_>>>()?;
        // last index whose error exceeds tol; n0 is the member after it
        let n0 = match errs.iter().rposition(|&e| e > tol) {
            None => 1,
            Some(i) if i + 1 < n_max as usize => ns[i + 1],
            Some(i) => {
                let beyond = i >= n_max as usize;
                return Ok(CheckReport::fail(
                    check,
                    Fields::new()
                        .with("x", x)
                        .with("n", ns[i])
                        .with("error", errs[i])
                        .with("beyond_n_max", beyond),
                )
                .with("tol", tol)
                .with("n_max", n_max));
            }
        };
        if n0 > n0_max {
            n0_max = n0;
            worst_x = x;
        }
    }
    Ok(CheckReport::pass(check)
        .with("tol", tol)
        .with("n_max", n_max)
        .with("grid_points", grid.len())
        .with("n0_max", n0_max)
        .with("n0_max_at", worst_x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyPoint {
    pub n: u32,
    pub u: Option<f64>,
    pub max_residual: Option<f64>,
    /// Same point from the probe start, within `2 tol`.
    pub unique: Option<bool>,
    pub note: String,
}

/// Solves `(A, S_n, S_n)` from `x0` for every `n`, then re-solves from the
/// domain midpoint to probe uniqueness. Per-`n` failures are recorded.
pub fn fixed_points_of_family(family: &MapFamily, x0: f64, n_list: &[u32], tol: f64, max_n: usize) -> Vec<FamilyPoint> {
    let probe = family
        .space
        .domain()
        .parts()
        .first()
        .map(|p| p.midpoint())
        .unwrap_or(x0);
    n_list
        .par_iter()
        .map(|&n| {
            let failed = |note: String| FamilyPoint {
                n,
                u: None,
                max_residual: None,
                unique: None,
                note,
            };
            let triple = match family.triple(n) {
                Ok(t) => t,
                Err(e) => return failed(e.to_string()),
            };
            let first = match solve_common_fixed_point(&triple, x0, tol, max_n, None) {
                Ok(r) => r,
                Err(e) => return failed(e.to_string()),
            };
            let Some(u) = first.candidate else {
                return failed(first.reason);
            };
            let second = solve_common_fixed_point(&triple, probe, tol, max_n, None).ok();
            let unique = second
                .as_ref()
                .map(|r| r.candidate.is_some_and(|v| (v - u).abs() <= 2.0 * tol));
            FamilyPoint {
                n,
                u: Some(u),
                max_residual: first.residuals.map(|r| r.max()),
                unique,
                note: match unique {
                    Some(false) => format!("start {probe} gives a different point"),
                    _ => String::new(),
                },
            }
        })
        .collect()
}

/// Distance steps used to sample the continuity of `A` near a point.
const CONTINUITY_STEPS: [f64; 4] = [1e-3, 1e-5, 1e-7, 1e-9];

/// Forward: if `u_n` settles to `L` then `S L = A L = L` (and `L` equals
/// the declared `u`, when given). Backward: a declared `u` with
/// `S u = A u = u` must be the limit of `u_n`. The limit is the
/// extrapolation `2 u_{2n} - u_n` over the last entries, settled when two
/// consecutive extrapolations agree within `tol`.
pub fn check_limit_equivalence(
    family: &MapFamily,
    u_list: &[(u32, f64)],
    declared_u: Option<f64>,
    tol: f64,
) -> Result<CheckReport> {
    if u_list.is_empty() {
        return Err(Error::Argument("no fixed points supplied".into()));
    }
    let mut us = u_list.to_vec();
    us.sort_by_key(|p| p.0);
    let extrap = |i: usize| {
        let (n1, a) = us[i - 1];
        let (n2, b) = us[i];
        if n2 == 2 * n1 {
            2.0 * b - a
        } else {
            b
        }
    };
    let k = us.len();
    let (limit, settled) = match k {
        1 => (us[0].1, false),
        2 => (extrap(1), (us[1].1 - us[0].1).abs() <= tol),
        _ => (extrap(k - 1), (extrap(k - 1) - extrap(k - 2)).abs() <= tol),
    };
    let s = family.limit_map()?;
    let a = &family.companion;
    let fixed = |p: f64| -> Result<(f64, f64)> {
        family.space.ensure_contains("limit-equivalence", p)?;
        Ok(((s.eval(p)? - p).abs(), (a.eval(p)? - p).abs()))
    };

    let mut r = CheckReport::new("limit_equivalence", Verdict::Pass)
        .with("members", k)
        .with("limit", limit)
        .with("settled", settled);
    let mut witness: Option<Fields> = None;

    let forward = if settled {
        let (ds, da) = fixed(limit)?;
        let ok = ds <= tol && da <= tol && declared_u.is_none_or(|u| (u - limit).abs() <= tol);
        r = r.with("forward_d(Su,u)", ds).with("forward_d(Au,u)", da);
        if !ok {
            witness.get_or_insert_with(|| {
                Fields::new()
                    .with("direction", "forward")
                    .with("limit", limit)
                    .with("d(Su,u)", ds)
                    .with("d(Au,u)", da)
            });
        }
        Some(ok)
    } else {
        None
    };
    let backward = match declared_u {
        Some(u) => {
            let (ds, da) = fixed(u)?;
            let is_fixed = ds <= tol && da <= tol;
            let ok = is_fixed && settled && (limit - u).abs() <= tol;
            r = r.with("u", u).with("u_is_fixed", is_fixed);
            if !ok {
                witness.get_or_insert_with(|| {
                    Fields::new()
                        .with("direction", "backward")
                        .with("u", u)
                        .with("limit", limit)
                        .with("u_is_fixed", is_fixed)
                });
            }
            Some(ok)
        }
        None => None,
    };
    if let Some(f) = forward {
        r = r.with("forward", f);
    }
    if let Some(b) = backward {
        r = r.with("backward", b);
    }
    let centre = declared_u.unwrap_or(limit);
    if family.space.contains(centre) {
        let a0 = a.eval(centre)?;
        let jump = CONTINUITY_STEPS
            .iter()
            .flat_map(|&h| [centre - h, centre + h])
            .filter(|&p| family.space.contains(p))
            .map(|p| a.eval(p).map(|v| (v - a0).abs()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0f64, f64::max);
        r = r
            .with("a_jump_near_u", jump)
            .with("a_continuous_sampled", jump <= CONTINUITY_STEPS[0].sqrt());
    }
    r.verdict = match (forward, backward) {
        (None, None) => Verdict::Inconclusive,
        _ if witness.is_some() => Verdict::Fail,
        _ => Verdict::Pass,
    };
    r.witness = witness;
    Ok(r)
}
