//! Basis- and sample-adaptive polynomial chaos surrogates.
//!
//! The crate builds sparse polynomial chaos surrogates of a scalar quantity of
//! interest by alternating three steps: select an anisotropic total-order
//! basis by cross-validated contraction and expansion, draw new input samples
//! so that the whole pool mimics a coherence-optimal sample for the new basis,
//! and solve a weighted ℓ1-minimization for the coefficients.
//!
//! - [`polynomials`]: orthonormal Legendre and Hermite recurrences.
//! - [`basis`]: multi-indices, `basis_id`, contraction, expansion, order bounds.
//! - [`sampling`]: coherence-optimal MCMC, weights and correction sampling.
//! - [`solver`]: basis pursuit denoising and isometry diagnostics.
//! - [`validation`]: cross-validated tolerance selection and basis validation.
//! - [`adaptation`]: the outer iteration.
//! - [`qoi`]: benchmark quantities of interest.
//! - [`metrics`]: telemetry, CSV output and summary statistics.

pub mod adaptation;
pub mod basis;
pub mod error;
pub mod exec;
pub mod metrics;
pub mod polynomials;
pub mod quadrature;
pub mod qoi;
pub mod rng;
pub mod sampling;
pub mod solver;
pub mod validation;

pub use error::{Error, Result};
pub use exec::Exec;

#[cfg(test)]
#[macro_export]
#[doc(hidden)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b): (f64, f64) = ($a, $b);
        assert!((a - b).abs() <= $tol, "{} vs {} (tol {})", a, b, $tol);
    }};
}
