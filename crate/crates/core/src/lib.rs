//! Potential theory and orthogonal polynomials for composition towers of
//! polynomials: capacity, Green's functions, equilibrium-measure
//! approximants, moments, Jacobi recurrence coefficients, resolvents, and
//! the interval geometry, smoothness and Parreau-Widom diagnostics of the
//! real quadratic family.

pub mod error;
pub mod k1_gamma;
pub mod measure;
pub mod orthopoly;
pub mod poly;
pub mod real_julia;
pub mod roots;
pub mod scalar;
pub mod sequence;

pub use error::{Error, Result};
pub use poly::{Polynomial, PowerSumTable};
pub use scalar::{CExt, Coeff, ExtReal, RealScalar, CQ, Q};
pub use sequence::{CompositionTower, RegularSequenceSpec, SequenceFamily, TailRule};
