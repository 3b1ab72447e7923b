use thiserror::Error;

use crate::optics::Outcome;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A transform was applied to a state that does not satisfy its
    /// precondition (for example splitting a photon that already left the
    /// common input mode).
    #[error("{op}: {detail}")]
    PipelineMisuse { op: &'static str, detail: String },

    #[error("{name} = {value} is outside {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("outcome {0:?} does not yield a key bit")]
    NotKept(Outcome),

    #[error("key length mismatch: alice has {alice} bits, bob has {bob}")]
    LengthMismatch { alice: usize, bob: usize },

    #[error("{0}")]
    Unsupported(String),
}

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    hi_inclusive: bool,
    expected: &'static str,
) -> Result<()> {
    let upper_ok = if hi_inclusive {
        value <= hi
    } else {
        value < hi
    };
    if value.is_finite() && value >= lo && upper_ok {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected,
        })
    }
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    check_range(name, value, 0.0, 1.0, true, "[0, 1]")
}
