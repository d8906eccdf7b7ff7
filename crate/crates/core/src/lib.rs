//! Coefficient algebra, characteristic functions and value-distribution
//! densities for L-functions of holomorphic modular forms, plus the
//! averaging experiments that compare empirical twist/family averages
//! against them.
//!
//! The crate is organised bottom-up:
//!
//! * [`cplx`]: parsing of complex numbers written as `a+bi`.
//! * [`forms`]: normalized Hecke eigenvalues and Satake parameters.
//! * [`characters`]: Dirichlet characters of prime modulus.
//! * [`coeffs`]: the `h_n`/`H_n` generating coefficients, `l_z(n)` and `c_{z,x}(n)`.
//! * [`lfun`]: log / log-derivative of twisted L-functions and quasi-character values.
//! * [`mtilde`]: the global characteristic functions (series, Euler product, harmonic).
//! * [`density`]: local quadrature, grids, Fourier inversion and decay diagnostics.
//! * [`harness`]: twist averages, equidistribution, form families, Petersson checks.
//! * [`selfcheck`]: a fast invariant sweep used by the CLI.

pub mod characters;
pub mod coeffs;
pub mod cplx;
pub mod density;
pub mod error;
pub mod forms;
pub mod harness;
pub mod lfun;
pub mod mtilde;
pub mod primes;
pub mod selfcheck;
pub mod sum;

pub use characters::{CharacterGroup, CharacterIndex};
pub use coeffs::{CoeffCase, CoeffContext, SquareDecomposition};
pub use density::{ComplexGrid, GridMeaning, GridParams, TestFunction};
pub use error::{Error, Result};
pub use forms::{ModularForm, SatakePair};
pub use harness::{ComparisonRecord, FormFamily};
pub use lfun::{EvalParams, Evaluation};
pub use mtilde::MtildeParams;
pub use num_complex::Complex64;
