//! Exact-arithmetic algebra of quadratic null forms: coefficient tensors,
//! their cone symbols, the null and strong-null condition checkers, the
//! free-parameter description of the null subspace, and classification over
//! the standard null-form basis.
//!
//! Everything here is exact rational arithmetic; floating point appears only
//! in the explicitly `sampled`/`f64` conversions used by the solver boundary
//! and by cross-validation tests. All operations are pure functions on
//! immutable values and safe to call concurrently.

mod classify;
mod tensor;
mod trig;

pub use classify::{
    basis_tensor, classify, clm_prototype, parametrize, preset_names, preset_tensor,
    random_decomposition, random_null_tensor, random_strong_null_tensor, random_tensor,
    synthesize, synthesize_from_parameters, Decomposition, Form, ParameterVector, BASIS,
};
pub use tensor::{
    entry_name, evaluate_nonlinearity, pair_index, parse_rational, parse_tensor,
    CoefficientTensor, NumericTensor, SemilinearTensor, PAIRS,
};
pub use trig::{rational_to_f64, TrigPoly, MAX_HARMONIC};

use thiserror::Error;

/// Errors from tensor parsing and classification.
#[derive(Debug, Error)]
pub enum AlgebraError {
    /// The tensor fails the null condition; the message lists the nonzero
    /// symbol coefficients.
    #[error("tensor is not a null form ({0})")]
    NotNull(String),

    /// A form or preset name outside the catalog.
    #[error("unknown form `{0}`")]
    UnknownForm(String),

    /// The decomposition basis lost rank. The basis is a compile-time
    /// constant of verified rank 11, so this is unreachable in practice.
    #[error("null-form basis is singular")]
    SingularBasis,

    /// Malformed tensor text.
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
