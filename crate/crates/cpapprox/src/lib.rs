//! Compound Poisson approximation of sums of independent non-negative
//! integer random variables.
//!
//! A sum `S = X_1 + ... + X_n` of independent compound Bernoulli summands
//! (each fires with probability `p_i` and then draws a positive integer
//! "severity" from `Q_i`) is close in distribution to the compound Poisson
//! law with rate `lambda = sum p_i` and mixture severity
//! `Q = sum (p_i / lambda) Q_i`. This crate makes that statement
//! quantitative:
//!
//! * truncated pmf arithmetic with explicit, conservative tail budgets
//!   ([`pmf`]);
//! * exact construction of the sum and its compound Poisson match, the
//!   latter by the forward-stable Katti–Panjer recursion ([`compound`]);
//! * total variation and relative entropy with truncation budgets
//!   ([`divergence`]);
//! * the score functions and information functionals that drive the sharpest
//!   bounds ([`information`]);
//! * Stein factors and seven explicit bound families, assembled into a
//!   single comparable report ([`bounds`]);
//! * reproducible figure, regime, and proposition-check experiments with a
//!   CSV/JSON command-line front end ([`experiment`]).
//!
//! # Quick taste
//!
//! ```
//! use cpapprox::pmf::{Severity, TruncationPolicy};
//! use cpapprox::compound::{SumSpec, sum_distribution, compound_poisson};
//! use cpapprox::divergence::total_variation;
//!
//! let policy = TruncationPolicy::default();
//! let q = Severity::geometric(0.2, &policy)?;
//! let spec = SumSpec::homogeneous(100, 0.05, &q, policy)?;
//! let exact = sum_distribution(&spec);
//! let approx = compound_poisson(spec.lambda(), spec.mixture_q(), &policy)?;
//! let tv = total_variation(&exact, &approx);
//! assert!(tv.value < 0.02);
//! # Ok::<(), cpapprox::Error>(())
//! ```

pub mod bounds;
pub mod compound;
pub mod divergence;
pub mod error;
pub mod experiment;
pub mod information;
pub mod pmf;
pub mod reference;

mod numeric;

pub use error::{Error, Result};

/// Runs every code block in the guide as a doctest, one module per
/// chapter so a failure names its chapter. The book itself is rendered
/// with mdbook from `book/` at the repository root.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/truncated-pmfs.md")]
    mod truncated_pmfs {}
    #[doc = include_str!("../../../book/src/compound-sums.md")]
    mod compound_sums {}
    #[doc = include_str!("../../../book/src/distances.md")]
    mod distances {}
    #[doc = include_str!("../../../book/src/information.md")]
    mod information {}
    #[doc = include_str!("../../../book/src/stein-bounds.md")]
    mod stein_bounds {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
