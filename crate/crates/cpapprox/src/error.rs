//! Error type shared by every module of the crate.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building distributions or evaluating
/// functionals on them.
///
/// Numerical routines in this crate are total on their documented domains;
/// errors are reserved for violated preconditions (bad parameters, mass that
/// does not add up, requests outside the supported desk scale).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A scalar parameter was outside its documented domain.
    #[error("invalid {what}: {value} (expected {expected})")]
    InvalidParameter {
        /// Name of the offending parameter.
        what: &'static str,
        /// The value that was supplied.
        value: f64,
        /// Human-readable description of the accepted range.
        expected: &'static str,
    },

    /// Stored mass plus tail mass strayed too far from 1.
    #[error("probability mass not conserved: stored + tail = {total} (must be 1 within 1e-12)")]
    MassNotConserved {
        /// The offending total.
        total: f64,
    },

    /// A probability vector contained a negative or non-finite entry.
    #[error("probability vector entry {index} is {value}; entries must be finite and >= 0")]
    BadProbability {
        /// Index of the offending entry.
        index: usize,
        /// The offending value.
        value: f64,
    },

    /// A severity distribution put mass at zero.
    #[error("severity places mass {value} at 0; severities must be supported on {{1, 2, ...}}")]
    SeverityMassAtZero {
        /// The mass found at index 0.
        value: f64,
    },

    /// Two slices that must have equal length did not.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch {
        /// Length of the first operand.
        left: usize,
        /// Length of the second operand.
        right: usize,
    },

    /// Mixture weights must form a probability vector.
    #[error("mixture weights sum to {sum}; they must sum to 1 within 1e-12")]
    BadMixtureWeights {
        /// The observed weight sum.
        sum: f64,
    },

    /// An operation that divides by the mean was applied to a mean-zero pmf.
    #[error("operation undefined for a distribution with zero mean")]
    ZeroMean,

    /// A summand index was out of range.
    #[error("summand index {index} out of range for {len} summands")]
    SummandIndex {
        /// Requested index.
        index: usize,
        /// Number of summands available.
        len: usize,
    },

    /// A sum specification had no summands.
    #[error("a sum specification needs at least one summand")]
    EmptySpec,

    /// The request exceeds the desk scale this crate is built for.
    #[error("request too large: {what} = {got}, supported maximum is {max}")]
    DeskScale {
        /// What was too large.
        what: &'static str,
        /// The requested size.
        got: usize,
        /// The supported maximum.
        max: usize,
    },

    /// A functional that needs full support was applied to a pmf with
    /// interior zeros.
    #[error("{what} requires strictly positive mass on the whole truncated range")]
    SupportDeficient {
        /// The functional that was refused.
        what: &'static str,
    },

    /// A slope fit was requested on too few points.
    #[error("slope fit needs at least 4 points, got {got}")]
    TooFewPoints {
        /// Number of points supplied.
        got: usize,
    },

    /// A quantity required by an experiment was not applicable or not finite.
    #[error("experiment error: {0}")]
    Experiment(String),

    /// A problem in a JSON sum-specification file, with field context.
    #[error("spec error at {location}: {message}")]
    Spec {
        /// Where in the document the problem sits, e.g. `summands[3].p`.
        location: String,
        /// What is wrong with it.
        message: String,
    },
}
