//! Equal sum partitions of `{1..n}` into parts of prescribed sizes.
//!
//! The crate covers the slack condition and its fractional relaxation (the
//! fluid mixing problem), arithmetic certificates of unsolvability, infinite
//! unsolvable families, randomized rounding for linear families, an exact
//! backtracking oracle and an exhaustive scanner.

pub mod composition;
pub mod criteria;
pub mod families;
pub mod error;
pub mod fluid;
pub mod instance;
pub mod json;
pub mod oracle;
pub mod rational;
pub mod rounding;
pub mod scanner;
pub mod slack;

pub use composition::{Block, Composition};
pub use error::CoreError;
pub use instance::{complete_incomplete, validate_espp, verify_partition, EqualSumPartition, EsppInstance, IncompleteInstance};
pub use rational::Rational;
pub use slack::{slack, slack_alphas, slack_at, target_sum, SlackRange, SlackValue};
