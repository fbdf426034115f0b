//! Numerical and combinatorial tools for discrete Schrodinger operators with
//! Sturmian potentials
//!
//! ```text
//! (H u)(n) = u(n+1) + u(n-1) + lambda v(n) u(n),
//! v(n) = chi_[1-theta, 1)(n theta + beta mod 1).
//! ```

pub mod cf;
pub mod error;
pub mod gordon;
pub mod subordinacy;
pub mod traces;
pub mod transfer;
pub mod words;

pub use error::{Error, Result};

/// Library version, embedded in generated artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
