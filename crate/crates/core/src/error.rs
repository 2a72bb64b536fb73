use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    InvalidArgument(String),
    /// The two edge series entering a tile disagree on the shared corner value.
    InconsistentBoundary { left_corner: f64, bottom_corner: f64 },
    /// A tile produced a non-finite edge series. Indices are 0-based `(k, l)`.
    NumericOverflow { tile: (usize, usize), delta: f64 },
    /// An oracle would exceed its memory budget (counted in `f64` entries).
    ResourceExhausted { needed: usize, budget: usize },
    /// A covariance matrix is not numerically positive definite.
    Factorization { pivot: usize },
    /// A Gram entry failed; `source` is the error of that pair.
    GramEntry { row: usize, col: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::InconsistentBoundary {
                left_corner,
                bottom_corner,
            } => write!(
                f,
                "inconsistent boundary: edge series disagree at the tile corner ({left_corner} vs {bottom_corner})"
            ),
            Error::NumericOverflow { tile, delta } => write!(
                f,
                "numeric overflow in tile ({}, {}) with increment product {delta}; consider rescaling the inputs",
                tile.0, tile.1
            ),
            Error::ResourceExhausted { needed, budget } => write!(
                f,
                "resource budget exceeded: {needed} entries needed, budget is {budget}"
            ),
            Error::Factorization { pivot } => write!(
                f,
                "covariance factorization failed at pivot {pivot}; try adding jitter to the diagonal"
            ),
            Error::GramEntry { row, col, source } => write!(f, "Gram entry ({row}, {col}): {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::GramEntry { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
