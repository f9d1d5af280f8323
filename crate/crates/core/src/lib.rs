//! Finite-dimensional workbench for Markov quasi-similarity of Koopman
//! operators.
//!
//! The crate realizes, at a fixed truncation scale, the objects that show up
//! when two measure-preserving automorphisms are compared through Markov
//! intertwiners:
//!
//! * [`hilbert`]: dense complex operators, unitary eigensystems, cyclic
//!   (Krylov) subspaces and a small sparse operator type.
//! * [`spectral`]: spectral measures, spectral profiles and a certificate that
//!   quasi-similar unitaries are spectrally equivalent.
//! * [`weights`]: the nonnegative summable weight sequence obtained as Fourier
//!   coefficients of `exp(2 - 1/|x - 1/2|)`, Toeplitz convolution operators and
//!   their injectivity margins.
//! * [`finsets`]: finite subsets of the integers with the hat/tilde
//!   reindexing used by the character model.
//! * [`model`]: the two skew-product extensions over a cyclic base, their
//!   Koopman operators in the Walsh character basis, the Markov operator
//!   `J = sum a_n U_{I_n}` and its checks.
//! * [`joinings`]: finite joinings and the joining/Markov operator
//!   correspondence.
//! * [`markov`]: verification of the Markov axioms for weighted operators.
//! * [`cli`]: configuration, commands and JSON/CSV reports driving the `qsim`
//!   binary.

pub mod cli;
pub mod error;
pub mod finsets;
pub mod hilbert;
pub mod joinings;
pub mod markov;
pub mod model;
pub mod spectral;
pub mod weights;

pub use error::{Error, Result};
pub use num::complex::Complex64;
