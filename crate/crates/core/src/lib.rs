//! Associated Euler totient functions `phi(n, F)` of polynomial Euler
//! products, their summatory error terms, and the numerical checks that
//! relate the weighted and unweighted error terms.
//!
//! Module map:
//!
//! * [`euler`]: product specs, local factors, `gamma`, `alpha`, `phi`, `C(F)`.
//! * [`sources`]: Dirichlet characters, tau coefficients, eigenvalue tables.
//! * [`sieve`]: SPF tables, bulk `phi(n, F) / n` and the checkpointed scan.
//! * [`analysis`]: residuals, decay fits, series identities and reports.

pub mod analysis;
pub mod arith;
pub mod error;
pub mod euler;
pub mod selftest;
pub mod sieve;
pub mod sources;
pub mod summation;

pub use error::{Error, Result};
pub use euler::{
    c_constant, c_constant_within_coverage, BuildOptions, ConstantResult, EulerProductSpec, ProductDescriptor,
};
