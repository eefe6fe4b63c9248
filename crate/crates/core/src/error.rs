use num_bigint::BigInt;
use thiserror::Error;

/// Rejections raised by compositions, instances and the slack functions.
///
/// Each variant names the violated condition and carries the witness values
/// so that reports can quote them.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: BigInt },
    #[error("k = {k} does not divide n(n+1)/2 = {triangle} (n = {n}), so the target sum is not integral")]
    NonIntegralTarget { n: BigInt, k: BigInt, triangle: BigInt },
    #[error("part {index} is zero; every part must be a positive integer")]
    NonPositivePart { index: usize },
    #[error("parts must be non-descending, but part {index} ({value}) is smaller than its predecessor ({previous})")]
    Descending { index: BigInt, value: u64, previous: u64 },
    #[error("parts sum to {actual}, expected n = {expected}")]
    SumMismatch { expected: BigInt, actual: BigInt },
    #[error("composition has {actual} parts, expected k = {expected}")]
    LengthMismatch { expected: BigInt, actual: BigInt },
    #[error("index {index} outside the admissible range 1..={max}")]
    IndexOutOfRange { index: BigInt, max: BigInt },
    #[error("slack condition fails at j = {index}: slack_j = {value} < 0")]
    SlackViolated { index: BigInt, value: BigInt },
    #[error("an incomplete prefix must be nonempty and shorter than k = {k}, got length {len}")]
    PrefixLength { len: BigInt, k: BigInt },
    #[error("the remaining mass {remaining} cannot fill {slots} parts of size at least {last}")]
    NoRoomForCompletion { remaining: BigInt, slots: BigInt, last: u64 },
    #[error("completion violates the slack condition at j = {index} (slack_j = {value})")]
    CompletionViolatesSlack { index: BigInt, value: BigInt },
    #[error("invalid alpha vector: {0}")]
    InvalidAlphaVector(String),
    #[error("malformed input: {0}")]
    Schema(String),
    #[error("instance too large for explicit enumeration: {0}")]
    TooLarge(String),
}
