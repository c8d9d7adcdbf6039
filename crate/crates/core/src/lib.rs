//! Thin-film solvers for active nematic liquid-crystal films.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod column;
pub mod diagnostics;
pub mod error;
pub mod film;
pub mod flatfilm;
pub mod lep;
pub mod lubrication;
pub mod material;
pub mod numerics;
pub mod smallangle;

pub use error::{Error, ErrorCategory, Result};
