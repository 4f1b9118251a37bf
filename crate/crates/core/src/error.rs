use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed caller input: bad symbol index, bad parameter, bad option.
    #[error("input error: {0}")]
    Input(String),

    #[error("alphabet mismatch: {left:?} vs {right:?}")]
    AlphabetMismatch { left: Vec<String>, right: Vec<String> },

    #[error("weights must be non-negative and sum to 1 (sum = {sum})")]
    WeightSum { sum: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Enumeration or shift guard exceeded.
    #[error("resource limit: {what} needs {needed} entries, cap is {cap}")]
    Resource { what: String, needed: u128, cap: u128 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("search cap exceeded: {0}")]
    SearchCap(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource { .. } | Error::SearchCap(_) => 3,
            Error::Io(_) => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::AlphabetMismatch { .. } => "alphabet_mismatch",
            Error::WeightSum { .. } => "weight_sum",
            Error::InvalidModel(_) => "invalid_model",
            Error::Resource { .. } => "resource",
            Error::Domain(_) => "domain",
            Error::SearchCap(_) => "search_cap",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}
