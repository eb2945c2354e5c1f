//! Exact pseudo-measures on the rational projective line.

pub mod boundary;
pub mod cli;
pub mod coeff;
pub mod dedekind;
pub mod error;
pub mod farey;
pub mod gauss;
pub mod levy;
pub mod linalg;
pub mod measure;
pub mod modular;
pub mod nc;
pub mod quadratic;
pub mod tree;

pub use error::{Error, Result};
