use evtdyn::Error;

/// Everything that ends a run early, with its process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or malformed input files.
    Input(String),
    /// Invalid or inconsistent settings.
    Config(String),
    /// A fit was produced but failed the required goodness-of-fit test.
    Gof(String),
    Lib(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Config(_) => 6,
            Failure::Gof(_) => 5,
            Failure::Lib(e) => match e {
                Error::Divergence { .. } => 3,
                Error::Config(_)
                | Error::DimensionMismatch { .. }
                | Error::Unsupported(_)
                | Error::Verification(_) => 6,
                Error::Fit { .. }
                | Error::Degenerate(_)
                | Error::EstimatorDegenerate(_)
                | Error::TooFewPoints { .. }
                | Error::Inversion(_)
                | Error::Domain(_)
                | Error::SingularObservation { .. } => 4,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Gof(m) => write!(f, "goodness-of-fit failure: {m}"),
            Failure::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;
