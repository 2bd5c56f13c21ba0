//! Discrete Painlevé II over finite fields via p-adic reductions.

pub mod confinement;
pub mod epsfield;
pub mod error;
pub mod expr;
pub mod field;
pub mod fpdynamics;
pub mod maps;
pub mod numbers;
pub mod tau;

pub use error::{Error, Result};
pub use numbers::{FpElem, FpProj, Prime, Rational, Valuation};
