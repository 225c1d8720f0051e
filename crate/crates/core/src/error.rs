//! Error type shared by all modules.

use crate::discrepancy::Interval;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("sequence must contain at least one value")]
    EmptySequence,

    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },

    #[error("sequence too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("difference order must be 1 or 2, got {0}")]
    InvalidOrder(u32),

    #[error("invalid interval [{a}, {b}): need 0 <= a < b <= 1")]
    InvalidInterval { a: f64, b: f64 },

    #[error("epsilon {0} outside (0, 1/10)")]
    EpsilonOutOfRange(f64),

    #[error("invalid sequence spec: {0}")]
    InvalidSpec(String),

    #[error("index range [{from}, {to}] not available (data covers [{lo}, {hi}])")]
    IndexOutOfRange { from: u128, to: u128, lo: u128, hi: u128 },

    #[error("requested range [{from}, {to}] is invalid or too long (cap {cap})")]
    BadRange { from: u128, to: u128, cap: u128 },

    #[error("cannot read sequence file: {0}")]
    Io(#[from] std::io::Error),

    #[error("cannot parse value on line {line}: {text:?}")]
    ParseLine { line: usize, text: String },

    #[error("h must be a nonzero integer")]
    ZeroFrequency,

    #[error("second-difference hypothesis violated at n={n}: {detail}")]
    HypothesisViolated { n: u128, detail: String },

    #[error("first differences of the residue sequence are not monotone nondecreasing: {0}")]
    NonMonotone(String),

    #[error("length guard exceeded: {len} points, cap {cap}")]
    GuardExceeded { len: usize, cap: usize },

    #[error("segment at n={n} needs {points} points, over the materialization cap {cap}")]
    SegmentTooLarge { n: u128, points: u128, cap: u128 },

    #[error("segment at n={n} exceeds the certification bound: measured {measured:.6} vs {allowed:.6} (witness [{}, {}))", witness.a, witness.b)]
    BoundExceeded { n: u128, measured: f64, allowed: f64, witness: Interval },

    #[error("closed form does not support extended precision: {0}")]
    PrecisionUnsupported(String),

    #[error("sequences must have equal length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),
}
