use thiserror::Error;

/// Errors raised by the protocol library.
#[derive(Error, Debug)]
pub enum Error {
    #[error("value {value} outside the representable range of FXP(ell={ell}, f={frac})")]
    Range { value: f64, ell: u32, frac: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("session error: {0}")]
    Session(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("correlation exhausted: {kind} (requested {requested}, remaining {remaining})")]
    Exhausted {
        kind: &'static str,
        requested: usize,
        remaining: usize,
    },
    #[error("fit did not reach target error {target:e} (achieved {achieved:e})")]
    Fit { target: f64, achieved: f64 },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
