use std::fmt;

use macc_lab::Error;

/// A command failure, mapped onto the process exit code.
#[derive(Debug)]
pub enum Fail {
    Invalid(String),
    Verification(String),
    TooLarge(String),
}

impl Fail {
    pub fn code(&self) -> u8 {
        match self {
            Fail::Invalid(_) => 2,
            Fail::Verification(_) => 3,
            Fail::TooLarge(_) => 4,
        }
    }
}

impl fmt::Display for Fail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fail::Invalid(m) | Fail::Verification(m) | Fail::TooLarge(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::TooLarge { .. } => Fail::TooLarge(msg),
            Error::DecodeFailure { .. } => Fail::Verification(msg),
            _ => Fail::Invalid(msg),
        }
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail::Invalid(format!("i/o: {e}"))
    }
}
