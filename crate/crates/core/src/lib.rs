//! Minimizing travelling waves of the Gross-Pitaevskii equation on the
//! cylinder `R x T_ell`: discrete Ginzburg-Landau energy, untwisted momentum,
//! momentum-constrained minimization and the associated curve diagnostics.

// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constructions;
pub mod error;
pub mod field;
pub mod inequalities;
pub mod minimizer;
pub mod par;
pub mod precond;
pub mod soliton1d;
pub mod sweep;

pub use error::{Error, Result};
pub use field::{Decomposition, Field2D, Grid, LoopTrace, MomentumClass};
