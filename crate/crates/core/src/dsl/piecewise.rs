use std::fmt;

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::expr::{fmt_rational, Expr, Num, Rational};
use crate::error::{Error, Result};
use crate::metric::{Interval, DOMAIN_MARGIN};

/// Residual bound on `|f(x) - y|` for an accepted preimage.
pub const PREIMAGE_TOL: f64 = 1e-12;

/// Bisection budget for non-linear pieces.
pub const MAX_HALVINGS: usize = 200;

/// Samples used to bracket a root and probe monotonicity on a non-linear piece.
const BRACKET_SAMPLES: usize = 65;

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    lo: Num,
    /// `None` is `+inf`.
    hi: Option<Num>,
    lo_closed: bool,
    hi_closed: bool,
    body: Expr,
    interval: Interval,
}

impl Piece {
    pub fn new(lo: Rational, hi: Option<Rational>, lo_closed: bool, hi_closed: bool, body: Expr) -> Result<Self> {
        let (lo, hi) = (Num::new(lo), hi.map(Num::new));
        let interval = Interval::new(
            lo.value(),
            hi.map_or(f64::INFINITY, |h| h.value()),
            lo_closed,
            hi_closed,
        )?;
        if let Some(h) = hi {
            if h.exact() < lo.exact() || (h.exact() == lo.exact() && !(lo_closed && hi_closed)) {
                return Err(Error::Argument(format!("empty interval {interval}")));
            }
        }
        Ok(Piece {
            lo,
            hi,
            lo_closed,
            hi_closed,
            body,
            interval,
        })
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }

    pub fn lo_exact(&self) -> Rational {
        self.lo.exact()
    }

    pub fn hi_exact(&self) -> Option<Rational> {
        self.hi.map(|h| h.exact())
    }

    pub fn with_body(&self, body: Expr) -> Piece {
        Piece { body, ..self.clone() }
    }

    /// Points where the body is evaluated when validating the piece.
    fn probe_points(&self) -> Vec<f64> {
        let (lo, hi) = self.interval.sampling_bounds();
        if self.interval.is_degenerate() {
            return vec![lo];
        }
        (0..=16).map(|i| lo + (hi - lo) * i as f64 / 16.0).collect()
    }

    /// Orders by lower endpoint, closed before open on ties.
    fn starts_before(&self, other: &Piece) -> std::cmp::Ordering {
        self.lo
            .exact()
            .cmp(&other.lo.exact())
            .then(other.lo_closed.cmp(&self.lo_closed))
    }

    fn overlaps(&self, next: &Piece) -> bool {
        match self.hi {
            None => true,
            Some(h) => {
                h.exact() > next.lo.exact() || (h.exact() == next.lo.exact() && self.hi_closed && next.lo_closed)
            }
        }
    }
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        let hi = self.hi.map_or("inf".to_string(), |h| fmt_rational(&h.exact()));
        write!(f, "piece {l}{},{hi}{r}: {}", fmt_rational(&self.lo.exact()), self.body)
    }
}

/// How to pick among several preimages when more than one piece admits a
/// solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreimagePolicy {
    #[default]
    LeftmostPiece,
    RightmostPiece,
    NearestToPrevious,
}

impl fmt::Display for PreimagePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreimagePolicy::LeftmostPiece => "leftmost-piece",
            PreimagePolicy::RightmostPiece => "rightmost-piece",
            PreimagePolicy::NearestToPrevious => "nearest-to-previous",
        })
    }
}

/// Point returned when a constant piece matches the target value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantRepresentative {
    #[default]
    Midpoint,
    /// `lo + theta * (hi - lo)` over the sampling bounds, `theta` in `[0, 1]`.
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseOptions {
    pub policy: PreimagePolicy,
    pub representative: ConstantRepresentative,
    pub tol: f64,
    pub max_halvings: usize,
}

impl Default for InverseOptions {
    fn default() -> Self {
        InverseOptions {
            policy: PreimagePolicy::default(),
            representative: ConstantRepresentative::default(),
            tol: PREIMAGE_TOL,
            max_halvings: MAX_HALVINGS,
        }
    }
}

impl InverseOptions {
    pub fn with_policy(policy: PreimagePolicy) -> Self {
        InverseOptions {
            policy,
            ..Self::default()
        }
    }
}

/// A real function given by disjoint interval pieces with expression
/// bodies. Pieces are kept sorted; gaps between pieces are allowed so that
/// discrete spaces can be described.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFn {
    pieces: Vec<Piece>,
}

impl PiecewiseFn {
    pub fn new(mut pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Structure("a function needs at least one piece".into()));
        }
        pieces.sort_by(|a, b| a.starts_before(b));
        for w in pieces.windows(2) {
            if w[0].overlaps(&w[1]) {
                return Err(Error::Structure(format!(
                    "pieces {} and {} overlap",
                    w[0].interval, w[1].interval
                )));
            }
        }
        for p in &pieces {
            for t in p.probe_points() {
                let v = p
                    .body
                    .eval(t)
                    .map_err(|e| Error::Structure(format!("piece {} does not evaluate at {t}: {e}", p.interval)))?;
                if !v.is_finite() {
                    return Err(Error::Structure(format!("piece {} is not finite at {t}", p.interval)));
                }
            }
        }
        Ok(PiecewiseFn { pieces })
    }

    pub fn identity(domain: Interval) -> Result<Self> {
        Self::from_interval(domain, Expr::Var)
    }

    /// Single-piece function over an interval whose bounds are exactly
    /// representable as rationals with small denominators.
    pub fn from_interval(domain: Interval, body: Expr) -> Result<Self> {
        let to_r = |v: f64| {
            Rational::approximate_float(v)
                .filter(|r: &Rational| r.to_f64() == Some(v))
                .ok_or_else(|| Error::Argument(format!("bound {v} is not a simple rational")))
        };
        let hi = if domain.hi.is_finite() {
            Some(to_r(domain.hi)?)
        } else {
            None
        };
        let piece = Piece::new(to_r(domain.lo)?, hi, domain.lo_closed, domain.hi_closed, body)?;
        Self::new(vec![piece])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn piece_index(&self, x: f64) -> Option<usize> {
        // pieces are sorted, so the first candidate whose upper end admits x decides
        self.pieces.iter().position(|p| p.interval.contains(x))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let Some(i) = self.piece_index(x) else {
            return Err(Error::domain("eval", x, self.describe_domain()));
        };
        let v = self.pieces[i].body.eval(x)?;
        if !v.is_finite() {
            return Err(Error::Eval(format!("non-finite value at x = {x}")));
        }
        Ok(v)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.piece_index(x).is_some()
    }

    /// True when every point of `target` lies in some piece.
    pub fn covers(&self, target: &Interval) -> bool {
        let mut at = target.lo;
        let mut need_closed = target.lo_closed;
        for p in &self.pieces {
            let iv = p.interval;
            if iv.hi < at || (iv.hi == at && !(iv.hi_closed && need_closed)) {
                continue;
            }
            let starts_ok = iv.lo < at || (iv.lo == at && (iv.lo_closed || !need_closed));
            if !starts_ok {
                return false;
            }
            if iv.hi > target.hi || (iv.hi == target.hi && (iv.hi_closed || !target.hi_closed)) {
                return true;
            }
            at = iv.hi;
            need_closed = !iv.hi_closed;
            if at == target.hi && !target.hi_closed && !need_closed {
                return true;
            }
        }
        false
    }

    /// Finite piece endpoints in increasing order without duplicates.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .pieces
            .iter()
            .flat_map(|p| [Some(p.interval.lo), p.interval.hi.is_finite().then_some(p.interval.hi)])
            .flatten()
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Replaces the body of piece `index`.
    pub fn with_piece_body(&self, index: usize, body: Expr) -> Result<Self> {
        let Some(piece) = self.pieces.get(index) else {
            return Err(Error::Argument(format!(
                "piece index {index} out of range (function has {} pieces)",
                self.pieces.len()
            )));
        };
        let mut pieces = self.pieces.clone();
        pieces[index] = piece.with_body(body);
        Self::new(pieces)
    }

    fn describe_domain(&self) -> String {
        self.pieces
            .iter()
            .map(|p| p.interval.to_string())
            .collect::<Vec<_>>()
            .join(" U ")
    }

    /// Deterministic text that parses back to a structurally equal function.
    pub fn canonical_format(&self) -> String {
        self.pieces.iter().map(Piece::to_string).collect::<Vec<_>>().join("; ")
    }

    /// Some `x` with `|f(x) - y| <= opts.tol`, chosen per `opts.policy`
    /// (`previous` feeds the nearest-to-previous policy). `None` when `y`
    /// is outside the range.
    pub fn preimage(&self, y: f64, opts: &InverseOptions, previous: Option<f64>) -> Result<Option<f64>> {
        if !y.is_finite() {
            return Err(Error::Argument(format!("preimage target {y} is not finite")));
        }
        let mut found = Vec::new();
        for p in &self.pieces {
            if let Some(x) = invert_piece(p, y, opts)? {
                found.push(x);
            }
        }
        Ok(match (opts.policy, previous) {
            (PreimagePolicy::RightmostPiece, _) => found.last().copied(),
            (PreimagePolicy::NearestToPrevious, Some(prev)) => found
                .iter()
                .copied()
                .min_by(|a, b| (a - prev).abs().total_cmp(&(b - prev).abs())),
            _ => found.first().copied(),
        })
    }
}

impl fmt::Display for PiecewiseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_format())
    }
}

fn representative(iv: &Interval, rep: ConstantRepresentative) -> f64 {
    if iv.is_degenerate() {
        return iv.lo;
    }
    match rep {
        ConstantRepresentative::Midpoint => iv.midpoint(),
        ConstantRepresentative::Fraction(theta) => {
            let (lo, hi) = iv.sampling_bounds();
            lo + theta.clamp(0.0, 1.0) * (hi - lo)
        }
    }
}

/// Pulls `x` onto a closed endpoint it misses by rounding only.
fn snap(iv: &Interval, x: f64) -> Option<f64> {
    if iv.contains(x) {
        return Some(x);
    }
    let near = |e: f64| (x - e).abs() <= DOMAIN_MARGIN * e.abs().max(1.0);
    if iv.lo_closed && near(iv.lo) {
        Some(iv.lo)
    } else if iv.hi_closed && near(iv.hi) {
        Some(iv.hi)
    } else {
        None
    }
}

fn invert_piece(p: &Piece, y: f64, opts: &InverseOptions) -> Result<Option<f64>> {
    let iv = &p.interval;
    let accept = |x: f64| -> Result<Option<f64>> {
        let v = p.body.eval(x)?;
        Ok(((v - y).abs() <= opts.tol).then_some(x))
    };
    if iv.is_degenerate() {
        return accept(iv.lo);
    }
    if let Some((slope, intercept)) = p.body.affine() {
        if slope.is_zero() {
            return accept(representative(iv, opts.representative));
        }
        let (m, c) = (ratio_f64(slope), ratio_f64(intercept));
        return match snap(iv, (y - c) / m) {
            Some(x) => accept(x),
            None => Ok(None),
        };
    }
    bisect_piece(p, y, opts)
}

fn ratio_f64(r: Rational) -> f64 {
    let v = *r.numer() as f64 / *r.denom() as f64;
    if r.is_negative() {
        -v.abs()
    } else {
        v
    }
}

fn bisect_piece(p: &Piece, y: f64, opts: &InverseOptions) -> Result<Option<f64>> {
    let iv = &p.interval;
    let g = |x: f64| p.body.eval(x).map(|v| v - y);
    let (lo, mut hi) = iv.effective_bounds(DOMAIN_MARGIN);
    if !hi.is_finite() {
        // grow the window until the target is bracketed or the body flattens out
        hi = iv.sampling_bounds().1;
        let g_lo = g(lo)?;
        while g_lo * g(hi)? > 0.0 && hi < 1e12 {
            hi = lo + 2.0 * (hi - lo);
        }
    }
    let xs: Vec<f64> = (0..BRACKET_SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / (BRACKET_SAMPLES - 1) as f64)
        .collect();
    let gs = xs.iter().map(|&x| g(x)).collect::<Result<Vec<_>>>()?;
    if let Some(i) = gs.iter().position(|&v| v == 0.0) {
        return Ok(Some(xs[i]));
    }
    let bracket = gs.windows(2).position(|w| w[0].signum() != w[1].signum());
    let monotone = gs.windows(2).all(|w| w[1] >= w[0]) || gs.windows(2).all(|w| w[1] <= w[0]);
    let Some(i) = bracket else {
        if monotone {
            return Ok(None);
        }
        return Err(Error::Inversion(format!(
            "piece {} is not monotone and no sign change brackets y = {y}",
            iv
        )));
    };
    let (mut a, mut b, mut ga) = (xs[i], xs[i + 1], gs[i]);
    for _ in 0..opts.max_halvings {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            a = mid;
            b = mid;
            break;
        }
        if gm.signum() == ga.signum() {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    let x = if g(a)?.abs() <= g(b)?.abs() { a } else { b };
    Ok(((g(x)?).abs() <= opts.tol).then_some(x))
}
