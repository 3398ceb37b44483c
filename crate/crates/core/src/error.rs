use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping of [`Error`] variants, used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    /// The input data violates a precondition (bad file, class too small, ...).
    Data,
    /// The requested configuration cannot be honored for this data.
    Config,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    MalformedFile(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("label {label} at row {row} is out of range for {n_classes} classes")]
    LabelOutOfRange {
        row: usize,
        label: u32,
        n_classes: usize,
    },

    #[error("class {0} has no members")]
    EmptyClass(u32),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("class {class} has {size} members, need at least {} for {c} neighbors", c + 1)]
    ClassTooSmall { class: u32, size: usize, c: usize },

    #[error("requested {requested} neighbors but only {available} base points are eligible")]
    TooFewBasePoints { requested: usize, available: usize },

    #[error("requested {requested} voters but only {available} training points exist")]
    TooFewTrainPoints { requested: usize, available: usize },

    #[error("singular local Gram system{}", .row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    SingularSystem { row: Option<usize> },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dimension mismatch: expected width {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("target dimension {requested} exceeds the maximum {max} for this data")]
    TargetDimTooLarge { requested: usize, max: usize },

    #[error("symmetric eigensolver failed: {0}")]
    EigSolverFailure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("bad generator parameters: {0}")]
    BadParams(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Io(_) => ErrorKind::Io,
            MalformedFile(_)
            | NonFiniteValue { .. }
            | LabelOutOfRange { .. }
            | EmptyClass(_)
            | InvalidShape(_)
            | ClassTooSmall { .. }
            | TooFewBasePoints { .. }
            | TooFewTrainPoints { .. }
            | ShapeMismatch(_)
            | DimensionMismatch { .. }
            | LengthMismatch { .. }
            | EmptyInput => ErrorKind::Data,
            TargetDimTooLarge { .. }
            | InvalidConfig(_)
            | NonPositiveTemperature(_)
            | BadParams(_) => ErrorKind::Config,
            SingularSystem { .. } | EigSolverFailure(_) => ErrorKind::Numerical,
        }
    }
}
