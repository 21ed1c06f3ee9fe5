use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |M - M^H| = {deviation:e} exceeds {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("invalid matrix shape: {0}")]
    Shape(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid probability space: {0}")]
    InvalidSpace(String),

    #[error("conditioning event has probability zero")]
    ConditionOnNull,

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("outcome {0} is not in the spectrum")]
    OutcomeNotInSpectrum(f64),

    #[error("outcome {outcome} has probability {probability:e}; the branch cannot be selected")]
    ZeroProbabilityBranch { outcome: f64, probability: f64 },

    #[error("outcome {outcome} has an eigenspace of rank {rank}; a non-degenerate spectrum is required")]
    DegenerateSpectrum { outcome: f64, rank: usize },

    #[error("observables {first} and {second} do not commute: max |[A,B]| = {norm:e}")]
    IncompatibleFamily {
        first: usize,
        second: usize,
        norm: f64,
    },

    #[error("numerical integrity check failed: {0}")]
    NumericalIntegrity(String),

    #[error("observable spectrum must lie in [-1, 1]; found eigenvalue {0}")]
    UnboundedObservable(f64),

    #[error("meter/system outcome bijection is missing or inconsistent: {0}")]
    OutcomeMismatch(String),

    #[error("coupling is not unitary: max |U^H U - I| = {0:e}")]
    NotUnitary(f64),

    #[error("superoperator does not annihilate the trace: max column defect {0:e}")]
    NotTraceAnnihilating(f64),

    #[error("positivity lost at t = {t}: min eigenvalue {min_eigenvalue:e}; reduce the step size")]
    StepTooLarge { t: f64, min_eigenvalue: f64 },

    #[error("distance to the steady state does not decay over the fit window")]
    NoDecay,

    #[error("measurement record is empty")]
    EmptyRecord,

    #[error("click record is degenerate: {0}")]
    DegenerateRecord(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config at `{field}`: {reason}")]
    ConfigInvalid { field: String, reason: String },
}
