use std::fmt;

/// Failure classes mapped to process exit codes: configuration problems
/// exit 2, solver and admissibility failures exit 3, filesystem failures
/// exit 4.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// A core error raised while interpreting the configuration.
    pub fn config(e: cordsim_core::Error) -> Self {
        CliError::Config(e.to_string())
    }

    /// A core error raised during compute.
    pub fn solver(e: cordsim_core::Error) -> Self {
        CliError::Solver(e.to_string())
    }

    pub fn io(context: impl fmt::Display, e: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}
