use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown value `{value}` for variable `{variable}`")]
    UnknownValue { variable: String, value: String },

    #[error("invalid cpd `{name}`: {reason}")]
    InvalidCpd { name: String, reason: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("joint state space has {cells} cells, above the cap of {cap}")]
    StateSpaceTooLarge { cells: u128, cap: usize },

    #[error("unsupported hard-edge structure ({reason}): {}", edges.join(", "))]
    UnsupportedHardStructure { edges: Vec<String>, reason: String },

    #[error("the expectation form of the score needs finite confidences; hard edges: {}", .0.join(", "))]
    AlternatePathUnavailable(Vec<String>),

    #[error("ambiguous limit structure: {0}")]
    AmbiguousStructure(String),

    #[error("dataset `{0}` has no records")]
    EmptyDataset(String),

    #[error("factor `{0}` has no positive entry")]
    ZeroFactor(String),

    #[error("not a probability vector: {0}")]
    NotASimplex(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
