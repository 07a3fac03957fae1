#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod distill;
pub mod error;
pub mod eventsim;
pub mod numerics;
pub mod ot_align;
pub mod temporal_align;
pub mod trackmetrics;

pub use error::{Error, Result};
