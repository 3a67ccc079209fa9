use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("endpoint vacuum at x = {x}: |mean profile| = {modulus:.3e}; enlarge L")]
    EndpointVacuum { x: f64, modulus: f64 },

    #[error("loop vanishes at sample {index}; lifting undefined")]
    LoopVanishes { index: usize },

    #[error("loop winds {winding} times around 0; no periodic lifting")]
    LoopWinds { winding: i64 },

    #[error("lifting bound violated: {0}")]
    LiftBound(String),

    #[error("incompatible strip: {0}")]
    IncompatibleStrip(String),

    #[error("constraint unreachable from iterate: {0}")]
    ConstraintUnreachable(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("bracket does not straddle the critical length: {0}")]
    NotStraddling(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
