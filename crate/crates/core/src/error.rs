use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed configuration text; the message carries line and column.
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    /// The system parsed but violates a standing assumption.
    #[error("invalid system: {0}")]
    Invalid(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unknown pattern name `{0}`")]
    UnknownPattern(String),
    #[error("insufficient depth: need level {needed}, scales cover {available}")]
    InsufficientDepth { needed: usize, available: usize },
    #[error("word too short: need {needed} digits, word has {len}")]
    WordTooShort { needed: usize, len: usize },
    #[error("address does not match the level sequence: {0}")]
    AddressMismatch(String),
    #[error("enumeration would yield {count} approximate squares, cap is {cap}")]
    EnumerationCap { count: u128, cap: u128 },
    #[error("raster of {pixels} pixels exceeds cap of {cap}")]
    PixelCap { pixels: u128, cap: u128 },
    #[error("alpha {alpha} outside the open interval ({min}, {max})")]
    OutOfRange { alpha: f64, min: f64, max: f64 },
    #[error("degenerate spectrum: α_min = α_max = {}", tidy(*.alpha))]
    Degenerate { alpha: f64 },
    #[error("no bracket found for alpha {alpha} within |t| <= 65536")]
    NoBracket { alpha: f64 },
    #[error("tilt was built for the {tilt} orientation, coding uses {coding}")]
    OrientationMismatch { tilt: String, coding: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Shortest rendering of `x` after rounding to 12 significant digits.
fn tidy(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{rounded}")
}

impl Error {
    /// Process exit status for this error: 2 for usage and parse failures,
    /// 1 for domain and invariant failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Schema(_) | Error::Usage(_) | Error::Io(_) => 2,
            _ => 1,
        }
    }
}
