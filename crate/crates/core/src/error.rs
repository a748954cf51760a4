use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. Each variant maps to a stable
/// short code (see [`Error::code`]) that the command line tool prints.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    // --- file formats ---
    #[error("line {line}: malformed header: {detail}")]
    MalformedHeader { line: usize, detail: String },
    #[error("line {line}, column {col}: cannot parse {text:?}")]
    ParseValue { line: usize, col: usize, text: String },
    #[error("line {line}, column {col}: non-finite value")]
    NonFiniteValue { line: usize, col: usize },
    #[error("line {line}: label column missing")]
    MissingLabel { line: usize },
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount { line: usize, expected: usize, found: usize },
    #[error("header declares {declared} samples but {found} were read")]
    SampleCount { declared: usize, found: usize },
    #[error("payload size mismatch: expected {expected} bytes, found {found}")]
    PayloadSize { expected: u64, found: u64 },
    #[error("header declares {declared} classes but labels contain {found} distinct values")]
    EmptyClass { declared: usize, found: usize },
    #[error("label {label} cannot be written in this format")]
    LabelNotRepresentable { label: i64 },

    // --- dataset contracts ---
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("class {class} has {size} samples, cannot draw {requested} for training and keep one for testing")]
    InsufficientClassSize { class: usize, size: usize, requested: usize },
    #[error("covariance of class {class}, component {component} is not symmetric positive semidefinite")]
    NonPsdCovariance { class: usize, component: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("expected feature dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("label {label} outside 1..={n_classes}")]
    LabelOutOfRange { label: u32, n_classes: usize },

    // --- numerics ---
    #[error("projection columns are not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("denominator matrix is singular")]
    SingularDenominator,
    #[error("denominator trace is zero")]
    ZeroTrace,
    #[error("within-class dispersion is zero along the projection")]
    ZeroWithinDispersion,
    #[error("zero denominator in ascent direction ({which})")]
    ZeroDenominator { which: &'static str },
    #[error("target dimension {d} outside 1..{max}")]
    DimensionOutOfRange { d: usize, max: usize },
    #[error("residual data became degenerate before direction {index}")]
    DimensionExhausted { index: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("jacobi iteration did not converge")]
    NoConvergence,
    #[error("training set has a single class")]
    SingleClass,
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io(_) => "E_IO",
            Error::MalformedHeader { .. } => "E_HEADER",
            Error::ParseValue { .. } => "E_PARSE",
            Error::NonFiniteValue { .. } => "E_NONFINITE",
            Error::MissingLabel { .. } => "E_MISSING_LABEL",
            Error::FieldCount { .. } => "E_FIELD_COUNT",
            Error::SampleCount { .. } => "E_SAMPLE_COUNT",
            Error::PayloadSize { .. } => "E_PAYLOAD_SIZE",
            Error::EmptyClass { .. } => "E_EMPTY_CLASS",
            Error::LabelNotRepresentable { .. } => "E_LABEL_REPR",
            Error::InvalidDataset(_) => "E_DATASET",
            Error::InsufficientClassSize { .. } => "E_CLASS_SIZE",
            Error::NonPsdCovariance { .. } => "E_NON_PSD",
            Error::InvalidArgument(_) => "E_ARGUMENT",
            Error::DimensionMismatch { .. } => "E_DIM_MISMATCH",
            Error::LengthMismatch { .. } => "E_LENGTH",
            Error::LabelOutOfRange { .. } => "E_LABEL_RANGE",
            Error::NotOrthonormal { .. } => "E_NOT_ORTHONORMAL",
            Error::SingularDenominator => "E_SINGULAR",
            Error::ZeroTrace => "E_ZERO_TRACE",
            Error::ZeroWithinDispersion => "E_ZERO_WITHIN",
            Error::ZeroDenominator { .. } => "E_ZERO_DENOM",
            Error::DimensionOutOfRange { .. } => "E_DIM_RANGE",
            Error::DimensionExhausted { .. } => "E_DIM_EXHAUSTED",
            Error::NotPositiveDefinite => "E_NOT_PD",
            Error::NotSymmetric => "E_NOT_SYMMETRIC",
            Error::NoConvergence => "E_NO_CONVERGENCE",
            Error::SingleClass => "E_SINGLE_CLASS",
        }
    }

    /// Errors caused by bad user input rather than by the data or the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_) | Error::DimensionOutOfRange { .. }
        )
    }
}
