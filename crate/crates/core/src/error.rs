//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("conjugation shape mismatch: conjugator is {rows}x{cols}, operand has dim {operand}")]
    ConjShapeMismatch {
        rows: usize,
        cols: usize,
        operand: usize,
    },

    #[error("not Hermitian (asymmetry {asymmetry:.3e} exceeds tolerance {tol:.3e})")]
    NotHermitian { asymmetry: f64, tol: f64 },

    #[error("not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is {trace:.12e}, expected 1 within tolerance")]
    InvalidTrace { trace: f64 },

    #[error("vector norm is {norm:.12e}, expected 1 within tolerance")]
    NotNormalized { norm: f64 },

    #[error("eigensolver failed (lapack info {code}, matrix norm {norm:.3e})")]
    EigenFailed { code: i32, norm: f64 },

    #[error("probability {value} outside [0, 1]")]
    InvalidProbability { value: f64 },

    #[error("value {value} is not a nonnegative real")]
    NotNonnegative { value: f64 },

    #[error("dimension {requested} exceeds cap {cap}")]
    DimensionCap { requested: usize, cap: usize },

    #[error("generator count {count} exceeds cap {cap}; use a structured theory kind or smaller n")]
    GeneratorCap { count: u128, cap: usize },

    #[error("state is rank deficient (min eigenvalue {min_eigenvalue:.3e})")]
    RankDeficient { min_eigenvalue: f64 },

    #[error("dual bracket expanded past lambda = {lambda:.3e}; dual appears unbounded")]
    UnboundedDual { lambda: f64 },

    #[error("{kind} theories expose a structured path, not an explicit generator list")]
    StructuredKind { kind: &'static str },

    #[error("alpha = 1 is the relative-entropy limit; call rel_entropy instead")]
    AlphaOne,

    #[error("alpha {alpha} outside the valid range (0,1) U (1,inf)")]
    InvalidAlpha { alpha: f64 },

    #[error("operation supports qubits only, got dim {dim}")]
    QubitOnly { dim: usize },

    #[error("full-rank witness index {index} out of range for {count} generators")]
    BadWitness { index: usize, count: usize },

    #[error("partial trace dims ({d1}, {d2}) do not factor dim {dim}")]
    BadFactorization { d1: usize, d2: usize, dim: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
