use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed text input. `line` is 1-based; 0 when the input has no line structure.
    #[error("format error at line {line}, position {position}: {message}")]
    Format {
        line: usize,
        position: usize,
        message: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("operator is not Hermitian: {0}")]
    NotHermitian(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("observable with Z-support {support} is unrecoverable: readout attenuation {attenuation} <= {cutoff}")]
    Unrecoverable {
        support: String,
        attenuation: f64,
        cutoff: f64,
    },

    #[error("no readout calibration for Z-support {0}")]
    MissingCalibration(String),

    #[error("bitstring {bitstring:?} violates the {rule} rule: {detail}")]
    Bitstring {
        bitstring: String,
        rule: BitstringRule,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Validity rules for forging bitstrings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitstringRule {
    Length,
    Popcount,
    Alphabet,
    Distinct,
}

impl std::fmt::Display for BitstringRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BitstringRule::Length => "length",
            BitstringRule::Popcount => "popcount",
            BitstringRule::Alphabet => "alphabet",
            BitstringRule::Distinct => "distinct",
        })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn format(line: usize, position: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            position,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }

    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::Dimension { expected, found })
        }
    }
}
