use std::fmt;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// Exact rational constant with its nearest double cached for evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Num {
    exact: Rational,
    value: f64,
}

impl Num {
    pub fn new(exact: Rational) -> Self {
        // both parts are far below 2^53 in practice, so this is one correctly
        // rounded division
        let value = *exact.numer() as f64 / *exact.denom() as f64;
        Num { exact, value }
    }

    pub fn exact(&self) -> Rational {
        self.exact
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        self.exact == other.exact
    }
}

impl From<Rational> for Num {
    fn from(r: Rational) -> Self {
        Num::new(r)
    }
}

impl From<i64> for Num {
    fn from(n: i64) -> Self {
        Num::new(Rational::from_integer(n))
    }
}

/// Body of a piece: arithmetic over rational constants and the variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Num),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(r: Rational) -> Expr {
        Expr::Const(Num::new(r))
    }

    pub fn int(n: i64) -> Expr {
        Expr::Const(Num::from(n))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = self.eval_raw(x);
        if v.is_finite() {
            Ok(v)
        } else {
            self.eval_checked(x)
        }
    }

    /// IEEE evaluation; a zero division shows up as a non-finite value.
    fn eval_raw(&self, x: f64) -> f64 {
        match self {
            Expr::Const(c) => c.value,
            Expr::Var => x,
            Expr::Neg(a) => -a.eval_raw(x),
            Expr::Add(a, b) => a.eval_raw(x) + b.eval_raw(x),
            Expr::Sub(a, b) => a.eval_raw(x) - b.eval_raw(x),
            Expr::Mul(a, b) => a.eval_raw(x) * b.eval_raw(x),
            Expr::Div(a, b) => a.eval_raw(x) / b.eval_raw(x),
        }
    }

    fn eval_checked(&self, x: f64) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => c.value,
            Expr::Var => x,
            Expr::Neg(a) => -a.eval_checked(x)?,
            Expr::Add(a, b) => a.eval_checked(x)? + b.eval_checked(x)?,
            Expr::Sub(a, b) => a.eval_checked(x)? - b.eval_checked(x)?,
            Expr::Mul(a, b) => a.eval_checked(x)? * b.eval_checked(x)?,
            Expr::Div(a, b) => {
                let den = b.eval_checked(x)?;
                if den == 0.0 {
                    return Err(Error::Eval(format!("division by zero in `{self}` at x = {x}")));
                }
                a.eval_checked(x)? / den
            }
        })
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var => false,
            Expr::Neg(a) => a.is_constant(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// `(slope, intercept)` when the body is affine in `x` with rational
    /// coefficients. `None` for anything non-linear or on overflow.
    pub fn affine(&self) -> Option<(Rational, Rational)> {
        match self {
            Expr::Const(c) => Some((Rational::zero(), c.exact)),
            Expr::Var => Some((Rational::from_integer(1), Rational::zero())),
            Expr::Neg(a) => a.affine().map(|(m, c)| (-m, -c)),
            Expr::Add(a, b) => {
                let ((m1, c1), (m2, c2)) = (a.affine()?, b.affine()?);
                Some((m1.checked_add(&m2)?, c1.checked_add(&c2)?))
            }
            Expr::Sub(a, b) => {
                let ((m1, c1), (m2, c2)) = (a.affine()?, b.affine()?);
                Some((m1.checked_sub(&m2)?, c1.checked_sub(&c2)?))
            }
            Expr::Mul(a, b) => {
                let ((m1, c1), (m2, c2)) = (a.affine()?, b.affine()?);
                if m1.is_zero() {
                    Some((c1.checked_mul(&m2)?, c1.checked_mul(&c2)?))
                } else if m2.is_zero() {
                    Some((m1.checked_mul(&c2)?, c1.checked_mul(&c2)?))
                } else {
                    None
                }
            }
            Expr::Div(a, b) => {
                let ((m1, c1), (m2, c2)) = (a.affine()?, b.affine()?);
                if !m2.is_zero() || c2.is_zero() {
                    return None;
                }
                Some((m1.checked_div(&c2)?, c1.checked_div(&c2)?))
            }
        }
    }

    /// Folds a node whose operands are both constants. Falls back to the
    /// unfolded node on overflow or an exact division by zero.
    pub(crate) fn fold(self) -> Expr {
        let folded = match &self {
            Expr::Neg(a) => match **a {
                Expr::Const(c) => Some(-c.exact),
                _ => None,
            },
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => match (&**a, &**b) {
                (Expr::Const(p), Expr::Const(q)) => {
                    let (p, q) = (p.exact, q.exact);
                    match &self {
                        Expr::Add(..) => p.checked_add(&q),
                        Expr::Sub(..) => p.checked_sub(&q),
                        Expr::Mul(..) => p.checked_mul(&q),
                        _ if q.is_zero() => None,
                        _ => p.checked_div(&q),
                    }
                }
                _ => None,
            },
            _ => None,
        };
        folded.map(Expr::constant).unwrap_or(self)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if !c.exact.is_integer() => 2,
            Expr::Const(c) if c.exact.is_negative() => 3,
            _ => 4,
        }
    }
}

pub(crate) fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op, a, b) = match self {
            Expr::Const(c) => return f.write_str(&fmt_rational(&c.exact)),
            Expr::Var => return f.write_str("x"),
            Expr::Neg(a) => {
                return if a.precedence() < 3 {
                    write!(f, "-({a})")
                } else {
                    write!(f, "-{a}")
                };
            }
            Expr::Add(a, b) => (" + ", a, b),
            Expr::Sub(a, b) => (" - ", a, b),
            Expr::Mul(a, b) => ("*", a, b),
            Expr::Div(a, b) => ("/", a, b),
        };
        let p = self.precedence();
        if a.precedence() < p {
            write!(f, "({a})")?;
        } else {
            write!(f, "{a}")?;
        }
        f.write_str(op)?;
        // operators are left-associative, so an equal-precedence right
        // operand needs parentheses to survive a reparse
        if b.precedence() <= p {
            write!(f, "({b})")
        } else {
            write!(f, "{b}")
        }
    }
}
