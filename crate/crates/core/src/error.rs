use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("ring mismatch: {0}")]
    RingMismatch(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("polygon domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("matrix is not of full rank")]
    NotFullRank,
    #[error("zero object has no slope")]
    ZeroObject,
    #[error("bounded search inconclusive: {0}")]
    BoundedSearchInconclusive(String),
    #[error("search budget exceeded: {0}")]
    SearchBudgetExceeded(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("no adapted basis exists for the given data")]
    NoAdaptedBasis,
    #[error("filtered isocrystal is not weakly admissible")]
    NotWeaklyAdmissible,
    #[error("filtration has non-integral breaks: {0}")]
    NonIntegralFiltration(String),
    #[error("Frobenius is not diagonalizable over the rationals")]
    NotDiagonalizable,
    #[error("Galois action is not transitive")]
    NonTransitiveAction,
    #[error("character functions live on different Galois sets")]
    BaseMismatch,
    #[error("step budget exceeded after {steps} steps (theoretical bound {bound})")]
    StepBudgetExceeded { steps: usize, bound: String },
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
