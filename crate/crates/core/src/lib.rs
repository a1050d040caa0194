#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

pub mod cylinder;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod io;
pub mod kernel;
pub mod reduced;
pub mod roots;
pub mod rpo;

pub use error::{Error, Result};
