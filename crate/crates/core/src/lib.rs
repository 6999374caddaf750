// NaN-rejecting checks are written as negated comparisons on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod array;
pub mod sdp;
pub mod uplink;
pub mod wet;
pub mod schedule;
pub mod harness;
pub mod error;

pub use error::{Error, Result};
