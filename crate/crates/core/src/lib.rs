//! Steklov eigenpairs on balls and warped products, harmonic extension norms on interior
//! slices, and numerical audits of the interior decay and approximation estimates.

pub mod error;
pub mod field_eval;
pub mod frequency;
pub mod geometry;
pub mod gram_approx;
pub mod mixtures;
pub mod quadrature;
pub mod report;
pub mod runner;
pub mod spectrum;
pub mod verifier;

pub use error::{Error, Result};
