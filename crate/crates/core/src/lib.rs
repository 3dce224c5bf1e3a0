//! Numerical laboratory for common fixed points of three selfmaps `A`, `S`,
//! `T` on subsets of the real line.
//!
//! The crate builds `(S, T, A)`-orbits (`A x_n = S x_{n-1}` for odd `n`,
//! `T x_{n-1}` for even `n`), iterates them towards a common fixed point and
//! checks, on sampled points and explicit witness sequences, the hypotheses
//! such results rest on: rational contractive inequalities with a control
//! function `phi`, weak commutativity, compatibility (plain and of type
//! (A)) and reciprocal continuity.

pub mod config;
pub mod contraction;
pub mod corpus;
pub mod dsl;
pub mod error;
pub mod family;
pub mod hypotheses;
pub mod metric;
pub mod orbit;
pub mod phi;
pub mod report;

pub use error::{Error, Result};
