use hseom::HseomError;

/// Failure of a run, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Resource(String),
    Io(String),
}

impl CliError {
    pub fn config(field: &str, reason: impl std::fmt::Display) -> Self {
        Self::Config(format!("{field}: {reason}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Resource(_) => 4,
            Self::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Numerical(_) => "numerical",
            Self::Resource(_) => "resource",
            Self::Io(_) => "io",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Numerical(m) | Self::Resource(m) | Self::Io(m) => m,
        }
    }

    pub fn record(&self) -> serde_json::Value {
        serde_json::json!({ "exit_code": self.exit_code(), "kind": self.kind(), "message": self.message() })
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<HseomError> for CliError {
    fn from(e: HseomError) -> Self {
        let message = e.to_string();
        match e {
            HseomError::InvalidParameter { .. }
            | HseomError::DimensionMismatch { .. }
            | HseomError::OffGrid { .. }
            | HseomError::NotHermitian { .. }
            | HseomError::Parse { .. } => Self::Config(message),
            HseomError::ResourceRefusal { .. } => Self::Resource(message),
            HseomError::Quadrature { .. } | HseomError::Overflow(_) | HseomError::NonFinite { .. } => {
                Self::Numerical(message)
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}
