//! Split Terwilliger algebra semidefinite bounds for binary codes.

pub mod algebra;
pub mod bounds;
pub mod combinatorics;
mod error;
pub mod form;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod sdpa;
pub mod verifier;

pub use error::{Error, Result};
