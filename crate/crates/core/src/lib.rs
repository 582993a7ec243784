//! SAT instances, the gadget reduction to positive 1-in-3 SAT, the matrix
//! encoding of such instances, and exact restricted-isometry oracles.

pub mod construction;
pub mod error;
pub mod gadget;
pub mod generate;
pub mod linalg;
pub mod matrix;
pub mod pipeline;
pub mod rational;
pub mod report;
pub mod rip;
pub mod sat;
pub mod transforms;

pub use construction::ReductionParams;
pub use error::{Error, Result};
pub use matrix::{FloatMatrix, MatrixFile, RationalMatrix};
pub use rational::Rational;
pub use rip::{OracleOptions, RipReport};
