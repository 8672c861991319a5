use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Variants split into two families that the CLI maps to distinct exit
/// codes: malformed inputs ([`Error::is_validation`]) and numerical failures
/// such as a scaling table that does not dominate an envelope.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid resolution mismatch: {left} vs {right}")]
    ResolutionMismatch { left: usize, right: usize },

    #[error("invalid grid path: {0}")]
    InvalidPath(String),

    #[error("lag {lag} out of range for grid resolution {m}")]
    LagOutOfRange { lag: usize, m: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("scaling table fails to dominate envelope at lag {lag} (envelope {value}, g = 0)")]
    NotDominated { lag: usize, value: f64 },

    #[error("path is not in the Hölder space: modulus {value} at lag {lag} where g = 0")]
    NotInSpace { lag: usize, value: f64 },

    #[error("degenerate Young function: identically zero on the sample range")]
    DegenerateYoung,

    #[error("degenerate scaling table with nonzero paths")]
    DegenerateScaling,

    #[error("no sub-grid step with sqrt(g) <= {target}; increase the grid resolution")]
    CoveringTooCoarse { target: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for input-validation failures, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NotDominated { .. }
                | Error::NotInSpace { .. }
                | Error::DegenerateScaling
                | Error::DegenerateYoung
                | Error::CoveringTooCoarse { .. }
        )
    }

    /// Short machine-readable tag used in error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ResolutionMismatch { .. } => "resolution_mismatch",
            Error::InvalidPath(_) => "invalid_path",
            Error::LagOutOfRange { .. } => "lag_out_of_range",
            Error::Empty(_) => "empty_input",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NotDominated { .. } => "not_dominated",
            Error::NotInSpace { .. } => "not_in_space",
            Error::DegenerateYoung => "degenerate_young_function",
            Error::DegenerateScaling => "degenerate_scaling",
            Error::CoveringTooCoarse { .. } => "covering_too_coarse",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
