use std::fmt::Display;
use std::path::Path;

/// A failed command: exit code 2 for bad input or usage, 1 for everything else.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Display) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }

    pub fn internal(message: impl Display) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }
}

impl From<pamper_core::Error> for Failure {
    fn from(e: pamper_core::Error) -> Self {
        Failure::input(e)
    }
}

impl From<pamper_core::ParseError> for Failure {
    fn from(e: pamper_core::ParseError) -> Self {
        Failure::input(e)
    }
}

pub fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::internal(format!("{}: {e}", path.display())))
}

/// Attaches a file name to an input error.
pub fn in_file<T, E: Display>(path: &Path, r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}
