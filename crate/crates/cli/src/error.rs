//! CLI-level errors and the exit-code contract.
//!
//! Exit codes: 0 success, 2 usage/config error, 3 certification failure,
//! 4 divergence, 1 anything else.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Certification {
        name: String,
        iteration: usize,
        z_tag: String,
    },
    Divergence {
        step: usize,
    },
    Io(std::io::Error),
    Core(oscopt_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Certification { .. } => 3,
            CliError::Divergence { .. } => 4,
            CliError::Io(_) | CliError::Core(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Certification {
                name,
                iteration,
                z_tag,
            } => {
                if z_tag.is_empty() {
                    write!(f, "certificate {name} failed at iteration {iteration}")
                } else {
                    write!(
                        f,
                        "certificate {name} failed at iteration {iteration} (z = {z_tag})"
                    )
                }
            }
            CliError::Divergence { step } => write!(f, "run diverged at iteration {step}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<oscopt_core::Error> for CliError {
    fn from(e: oscopt_core::Error) -> Self {
        CliError::Core(e)
    }
}
