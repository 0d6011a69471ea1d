//! Sublevel-set statistics of trigonometric polynomials and Mahler measures on
//! the unit circle.

pub mod cnseq;
pub mod error;
pub mod experiments;
pub mod mahler;
pub mod meanmeasure;
pub mod sampling;
pub mod summation;
pub mod trigpoly;

pub use error::{Error, Result};
pub use trigpoly::{AlgebraicPoly, Term, TrigPoly};
