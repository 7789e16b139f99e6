//! Sequential testing of log-concavity on the real line.
//!
//! The test statistic is a universal likelihood ratio: the likelihood of a
//! predictable density estimator divided by the likelihood of the
//! log-concave maximum likelihood fit, recomputed on a batching schedule.
//! Under any log-concave law it is an e-process, so stopping the first time
//! it reaches `1/alpha` is a level-`alpha` sequential test.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod density;
pub mod eprocess;
pub mod error;
pub mod estimators;
pub mod lcmle;
pub mod numerics;
pub mod simlab;

pub use error::{Error, Result};
