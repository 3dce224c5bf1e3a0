//! Text format for the interval-piecewise real functions that define the
//! maps and control functions.

mod expr;
mod parse;
mod piecewise;

pub use expr::{Expr, Num, Rational};
pub use parse::{parse_expr, parse_piecewise, parse_rational};
pub use piecewise::{
    ConstantRepresentative, InverseOptions, Piece, PiecewiseFn, PreimagePolicy, MAX_HALVINGS, PREIMAGE_TOL,
};
