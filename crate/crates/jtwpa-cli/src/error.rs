use std::fmt;

/// Frontend failure, classed by process exit code: 1 for anything the user
/// can fix in the invocation or config file, 2 for numeric failures, 3 for
/// operating points outside the propagating band.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation, unparsable or invalid configuration. Exit 1.
    Config(String),
    /// Filesystem trouble while reading configs or writing results. Exit 1.
    Io(String),
    /// Failure reported by the analysis library, classed by its taxonomy.
    Lib(jtwpa::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Lib(e) => match e {
                jtwpa::Error::InvalidParameter(_) | jtwpa::Error::InvalidConfiguration(_) => 1,
                jtwpa::Error::Numeric(_) | jtwpa::Error::StepsExhausted { .. } => 2,
                jtwpa::Error::OutOfBand(_) => 3,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Io(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<jtwpa::Error> for CliError {
    fn from(e: jtwpa::Error) -> Self {
        CliError::Lib(e)
    }
}
