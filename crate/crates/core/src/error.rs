//! Error type shared by all modules of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// Operands do not conform (wrong row/column counts).
    #[error("{op}: shape mismatch, expected {expected}, got {found}")]
    ShapeMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Input is structurally valid but degenerate for the requested
    /// operation (e.g. a zero initial residual handed to Arnoldi).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The sketched norm of a nonzero block vanished: the sketch
    /// annihilated the block and the semi-norm carries no information.
    #[error("sketched semi-norm of a nonzero block is zero")]
    SemiNormDegeneracy,

    #[error("rank deficient: numerical rank {rank} < {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("memory budget exceeded: run needs {required} bytes, budget is {budget}")]
    MemoryBudget { required: usize, budget: usize },

    /// A non-finite value (NaN or infinity) appeared at the given
    /// 1-based iteration step.
    #[error("non-finite value detected at step {step}")]
    NumericalFailure { step: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
