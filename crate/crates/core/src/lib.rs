//! Discrete fractional series operators on ℤⁿ.
//!
//! The crate evaluates the operator
//! `T b(j) = Σ_{i ≠ A_k j} b(i) / Π_k |i − A_k j|^{α_k}` for integer matrices
//! `A_k`, its Riesz special case, the centered fractional maximal operator,
//! `(p, ∞, d_p)`-atoms with their region geometry, and a discrete Hardy-space
//! maximal function. The [`experiments`] module runs the numerical checks the
//! `latfrac` command line exposes.
//!
//! Floating point routines are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix `f64`. Matrix inverses and atom moments use exact
//! integer and rational arithmetic.

pub mod atoms;
pub mod error;
pub mod experiments;
pub mod exponent;
pub mod hardy;
pub mod lattice;
pub mod matrix;
pub mod operators;
pub mod scalar;
pub mod sequence;
pub mod spec;

pub use error::{Error, Result};
pub use exponent::{atom_degree, conjugate_exponent, ExponentPair};
pub use lattice::{norms_of_index, CubeWindow, LatticeIndex};
pub use matrix::{matrix_exact_inverse, matrix_norm_bounds, IntegerMatrix, NormBounds, RationalMatrix};
pub use scalar::Real;
pub use sequence::{lp_norm, LatticeSequence, SequenceFile};
pub use spec::{validate_spec, FractionalSpec, SpecFile, ValidationReport};

pub type Sequence = LatticeSequence<f64>;
pub type Sequence32 = LatticeSequence<f32>;
