use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({from}, {to}) appears in both the attack and the support relation")]
    DisjointnessViolation { from: String, to: String },

    #[error("edge ({from}, {to}) references unknown argument `{missing}`")]
    DanglingEdge {
        from: String,
        to: String,
        missing: String,
    },

    #[error("duplicate argument id `{0}`")]
    DuplicateId(String),

    #[error("{what} = {value} is outside [0, 1]")]
    RangeViolation { what: String, value: f64 },

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("unknown argument id `{0}`")]
    UnknownId(String),

    #[error("no edge ({from}, {to}) in either relation")]
    EdgeNotFound { from: String, to: String },

    #[error("QBAF has no claim argument")]
    MissingClaim,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("property premise not met: {0}")]
    PremiseViolation(String),

    #[error("solver did not converge after {steps} steps")]
    NonConvergence { steps: usize },

    #[error("corpus contains no documents")]
    EmptyCorpus,

    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),

    #[error("malformed model response: {0}")]
    MalformedResponse(String),

    #[error("annotation does not match the evidence list: {0}")]
    AnnotationMismatch(String),

    #[error("completion client error{}: {message}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Client {
        status: Option<u16>,
        message: String,
    },

    #[error("no fixture registered for prompt sha256 {0}")]
    MissingFixture(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DisjointnessViolation { .. } => "DisjointnessViolation",
            Error::DanglingEdge { .. } => "DanglingEdge",
            Error::DuplicateId(_) => "DuplicateId",
            Error::RangeViolation { .. } => "RangeViolation",
            Error::Schema { .. } => "SchemaError",
            Error::UnknownId(_) => "UnknownId",
            Error::EdgeNotFound { .. } => "EdgeNotFound",
            Error::MissingClaim => "MissingClaim",
            Error::InvalidParams(_) => "InvalidParams",
            Error::PremiseViolation(_) => "PremiseViolation",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::DuplicateDocId(_) => "DuplicateDocId",
            Error::MalformedResponse(_) => "MalformedResponse",
            Error::AnnotationMismatch(_) => "AnnotationMismatch",
            Error::Client { .. } => "ClientError",
            Error::MissingFixture(_) => "MissingFixture",
            Error::Io(_) => "IoError",
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn range(what: impl Into<String>, value: f64) -> Self {
        Error::RangeViolation {
            what: what.into(),
            value,
        }
    }
}

pub(crate) fn check_unit(what: impl Into<String>, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::range(what, value))
    }
}
