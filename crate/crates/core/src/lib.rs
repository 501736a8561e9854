//! Numerical Rankin-Selberg central values `L^(k)(1/2, f x W)` for a weight-2
//! newform `f` of squarefree level `N`, twisted by finite-order Hecke characters
//! `W = rho . chi o N` of an imaginary quadratic field `K` with `p`-power
//! conductors, together with the machinery to cross-check harmonic averages,
//! Galois averages and their Moebius relations by two independent computation
//! paths.
//!
//! Module layout:
//!
//! - [`arith`]: exact integer and Dirichlet-character arithmetic (Kronecker,
//!   Moebius, totient, unit groups, roots of unity).
//! - [`quadfield`]: the imaginary quadratic field, orders, binary quadratic
//!   form class groups, and ideal counting.
//! - [`newform`]: Fourier coefficients of the newform from `a_p` seeds,
//!   including elliptic-curve point counting for rational newforms.
//! - [`analytic`]: cutoff kernels for the approximate functional equation,
//!   certified truncation lengths, and auxiliary L-values for main terms.
//! - [`heckechar`]: enumeration of character families, tame parts,
//!   classification, and Dirichlet coefficients.
//! - [`averages`]: central values, harmonic and Galois averages, difference
//!   sums, and the identity residual reports.

pub mod analytic;
pub mod arith;
pub mod averages;
pub mod error;
pub mod heckechar;
pub mod kahan;
pub mod newform;
pub mod quadfield;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
