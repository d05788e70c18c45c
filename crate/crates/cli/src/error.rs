use std::fmt;

/// Usage problems exit with 2, numerical or diagnostic failures with 3.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: msg.into(),
        }
    }

    pub fn failure(msg: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: msg.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<symbiosim::Error> for CliError {
    fn from(e: symbiosim::Error) -> Self {
        use symbiosim::Error as E;
        let code = match e {
            E::Coordinate { .. }
            | E::Argument(_)
            | E::UnsupportedVariant(_)
            | E::GridMismatch(_)
            | E::MissingLog(_) => 2,
            E::NonMonotone(_)
            | E::Fit(_)
            | E::NonSummable(_)
            | E::Stability(_)
            | E::Window(_)
            | E::Simplex { .. } => 3,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::failure(format!("i/o error: {e}"))
    }
}
