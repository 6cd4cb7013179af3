//! Fixed-wing path-following guidance and control, with a closed-loop
//! rigid-body simulator and numerical stability checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airframe;
pub mod control;
pub mod error;
pub mod math;
pub mod oracles;
pub mod path;
pub mod sim;

pub use error::{Error, Result};
