//! Certified construction of solutions to `a*x + b*y = c*z` inside
//! Piatetski-Shapiro sequences `PS(alpha) = { floor(n^alpha) }` for
//! exponents `alpha > 2`, together with the exponent windows on which the
//! solutions persist, finite-depth Cantor levels of such exponents, the
//! Hausdorff-dimension lower bounds they support, and the discrepancy
//! toolkit used to study the underlying equidistribution.

pub mod alpha_solver;
pub mod bigfloat;
pub mod cli;
pub mod decimal;
pub mod dimension;
pub mod discrepancy;
pub mod error;
pub mod lifter;
pub mod primes;
pub mod ps_sequence;

pub use bigfloat::{CertifiedFloor, CertifiedReal, Certifier};
pub use error::{Error, Result};
