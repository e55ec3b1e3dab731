//! Truncated probability mass functions on the non-negative integers.
//!
//! Every distribution in this crate is carried as a dense vector of
//! probabilities `probs[0..=N]` together with an explicit, conservative
//! `tail_mass` covering everything beyond the stored range. Operations never
//! renormalise: truncated mass is moved into the tail budget instead, so
//! `stored + tail = 1` is an invariant (within 1e-12) that survives long
//! chains of convolutions. Downstream distance computations report the tail
//! budget alongside their values, which keeps truncation error visible
//! instead of silently absorbed.

use crate::error::{Error, Result};
use crate::numeric::{kahan_total, KahanSum};

/// Mass-conservation tolerance enforced on constructor inputs and asserted
/// throughout the test suite: `stored + tail` must be 1 within this amount.
pub const CONSERVATION_TOL: f64 = 1e-12;

/// Hard cap on stored support length; requests beyond this are rejected so a
/// typo cannot silently allocate gigabytes.
pub const MAX_SUPPORT_CAP: usize = 4096;

/// Truncation contract shared by constructors of infinite-support laws.
///
/// `epsilon` is the total tail-mass budget a constructor may leave behind;
/// `max_support` caps the stored support length regardless of the budget.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TruncationPolicy {
    epsilon: f64,
    max_support: usize,
}

impl TruncationPolicy {
    /// Builds a policy, requiring `0 < epsilon <= 1e-6` and
    /// `1 <= max_support <= 4096`.
    pub fn new(epsilon: f64, max_support: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1e-6) {
            return Err(Error::InvalidParameter {
                what: "epsilon",
                value: epsilon,
                expected: "0 < epsilon <= 1e-6",
            });
        }
        if max_support == 0 || max_support > MAX_SUPPORT_CAP {
            return Err(Error::DeskScale {
                what: "max_support",
                got: max_support,
                max: MAX_SUPPORT_CAP,
            });
        }
        Ok(Self {
            epsilon,
            max_support,
        })
    }

    /// The tail-mass budget.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The largest index a stored support may reach.
    pub fn max_support(&self) -> usize {
        self.max_support
    }
}

impl Default for TruncationPolicy {
    /// `epsilon = 1e-12`, `max_support = 4096`.
    fn default() -> Self {
        Self {
            epsilon: 1e-12,
            max_support: MAX_SUPPORT_CAP,
        }
    }
}

/// A truncated pmf on `{0, 1, ..., N}` with a conservative tail budget.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
    tail_mass: f64,
}

impl Pmf {
    /// Builds a pmf from explicit probabilities and a tail budget, validating
    /// non-negativity and mass conservation at `1e-12`.
    pub fn new(probs: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter {
                what: "probs.len()",
                value: 0.0,
                expected: "at least one entry",
            });
        }
        if probs.len() > MAX_SUPPORT_CAP + 1 {
            return Err(Error::DeskScale {
                what: "probs.len()",
                got: probs.len(),
                max: MAX_SUPPORT_CAP + 1,
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::BadProbability { index, value });
            }
        }
        if !tail_mass.is_finite() || tail_mass < 0.0 {
            return Err(Error::InvalidParameter {
                what: "tail_mass",
                value: tail_mass,
                expected: "finite and >= 0",
            });
        }
        let total = kahan_total(&probs) + tail_mass;
        if (total - 1.0).abs() > CONSERVATION_TOL {
            return Err(Error::MassNotConserved { total });
        }
        Ok(Self::from_raw(probs, tail_mass))
    }

    /// Internal constructor for values produced by the crate's own
    /// arithmetic: trims trailing exact zeros (semantically a no-op, but it
    /// keeps supports honest and convolution chains fast) and checks
    /// conservation only as a debug assertion.
    pub(crate) fn from_raw(mut probs: Vec<f64>, tail_mass: f64) -> Self {
        while probs.len() > 1 && *probs.last().unwrap() == 0.0 {
            probs.pop();
        }
        debug_assert!(
            (kahan_total(&probs) + tail_mass - 1.0).abs() < 1e-9,
            "internal mass drift: {}",
            kahan_total(&probs) + tail_mass
        );
        Self { probs, tail_mass }
    }

    /// The unit mass at `k`.
    pub fn point_mass(k: usize) -> Result<Self> {
        if k > MAX_SUPPORT_CAP {
            return Err(Error::DeskScale {
                what: "point_mass index",
                got: k,
                max: MAX_SUPPORT_CAP,
            });
        }
        let mut probs = vec![0.0; k + 1];
        probs[k] = 1.0;
        Ok(Self { probs, tail_mass: 0.0 })
    }

    /// The stored probabilities `probs[0..=N]`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `P(k)`, zero beyond the stored support.
    #[inline]
    pub fn prob(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    /// Number of stored entries (`N + 1`); always at least 1.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    /// The largest stored index `N`.
    pub fn max_stored(&self) -> usize {
        self.probs.len() - 1
    }

    /// Mass beyond the stored support (conservative upper budget).
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Compensated sum of the stored probabilities.
    pub fn stored_mass(&self) -> f64 {
        kahan_total(&self.probs)
    }

    /// Stored mass plus tail budget; 1 within `1e-12` for every value this
    /// crate constructs.
    pub fn total_mass(&self) -> f64 {
        self.stored_mass() + self.tail_mass
    }

    /// Mean over the stored support.
    ///
    /// This is a lower bound for the mean of the untruncated law; the
    /// truncation error is at most `tail_mass * max_support` for laws whose
    /// support was capped, and is negligible for tails at the default budget.
    pub fn mean(&self) -> f64 {
        let mut acc = KahanSum::new();
        for (k, &p) in self.probs.iter().enumerate() {
            acc.add(k as f64 * p);
        }
        acc.value()
    }

    /// Central second moment over the stored support.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let mut acc = KahanSum::new();
        for (k, &p) in self.probs.iter().enumerate() {
            let d = k as f64 - m;
            acc.add(d * d * p);
        }
        acc.value()
    }

    /// The size-biased pmf `P#(y) = (y + 1) P(y + 1) / mean`.
    ///
    /// The mean in the denominator is the stored-support mean, which makes
    /// the output sum to 1 exactly up to rounding; Poisson laws are fixed
    /// points of this map, and it shifts support down by one.
    pub fn size_bias(&self) -> Result<Self> {
        let m = self.mean();
        if m <= 0.0 {
            return Err(Error::ZeroMean);
        }
        if self.probs.len() == 1 {
            return Err(Error::ZeroMean);
        }
        let probs: Vec<f64> = (0..self.probs.len() - 1)
            .map(|y| (y + 1) as f64 * self.probs[y + 1] / m)
            .collect();
        let tail = (1.0 - kahan_total(&probs)).max(0.0);
        Ok(Self::from_raw(probs, tail))
    }

    /// Convolution under the default truncation policy.
    pub fn convolve(&self, other: &Pmf) -> Pmf {
        self.convolve_with_policy(other, &TruncationPolicy::default())
    }

    /// Convolution with the support capped at `policy.max_support`; mass
    /// pushed past the cap joins the tail budget, and the operands' tail
    /// budgets are inherited additively (conservative, never renormalised).
    pub fn convolve_with_policy(&self, other: &Pmf, policy: &TruncationPolicy) -> Pmf {
        let full_len = self.probs.len() + other.probs.len() - 1;
        let out_len = full_len.min(policy.max_support + 1);
        let mut acc = vec![KahanSum::new(); out_len];
        let mut spill = KahanSum::new();
        for (i, &pa) in self.probs.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            for (j, &pb) in other.probs.iter().enumerate() {
                if pb == 0.0 {
                    continue;
                }
                let k = i + j;
                let mass = pa * pb;
                if k < out_len {
                    acc[k].add(mass);
                } else {
                    spill.add(mass);
                }
            }
        }
        let probs: Vec<f64> = acc.iter().map(KahanSum::value).collect();
        // The stored grid carries `(1 - ta)(1 - tb)` of the true product
        // mass, so the inherited budget is exactly the complement — not
        // `ta + tb`, which overcounts by the cross term and breaks
        // conservation when both operands carry heavy tails.
        let inherited =
            self.tail_mass + other.tail_mass - self.tail_mass * other.tail_mass;
        Pmf::from_raw(probs, inherited + spill.value())
    }

    /// `n`-fold self-convolution; `n = 0` is the unit mass at 0.
    pub fn n_fold_convolve(&self, n: usize, policy: &TruncationPolicy) -> Pmf {
        let mut out = Pmf::point_mass(0).expect("index 0 is within the cap");
        for _ in 0..n {
            out = out.convolve_with_policy(self, policy);
        }
        out
    }

    /// Largest absolute pointwise difference, treating missing entries as 0.
    pub fn sup_distance(&self, other: &Pmf) -> f64 {
        let len = self.probs.len().max(other.probs.len());
        let mut worst = 0.0f64;
        for k in 0..len {
            worst = worst.max((self.prob(k) - other.prob(k)).abs());
        }
        worst
    }
}

/// A claim-size (severity) distribution: a truncated pmf supported on
/// `{1, 2, ...}` together with its mean.
///
/// The mean is stored separately so constructors with a closed form (the
/// geometric, mixtures) can carry the exact value instead of the truncated
/// lower bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Severity {
    pmf: Pmf,
    mean: f64,
}

impl Severity {
    /// Wraps a pmf as a severity, requiring zero mass at 0; the mean is
    /// computed from the stored support.
    pub fn new(pmf: Pmf) -> Result<Self> {
        if pmf.prob(0) != 0.0 {
            return Err(Error::SeverityMassAtZero { value: pmf.prob(0) });
        }
        let mean = pmf.mean();
        Ok(Self { pmf, mean })
    }

    /// Wraps a pmf as a severity with a caller-supplied exact mean.
    pub fn with_mean(pmf: Pmf, mean: f64) -> Result<Self> {
        if pmf.prob(0) != 0.0 {
            return Err(Error::SeverityMassAtZero { value: pmf.prob(0) });
        }
        if !(mean.is_finite() && mean >= 1.0) {
            return Err(Error::InvalidParameter {
                what: "severity mean",
                value: mean,
                expected: "finite and >= 1",
            });
        }
        Ok(Self { pmf, mean })
    }

    /// The unit severity: all mass at 1. Compounding with it reduces counts
    /// to themselves, so compound Poisson laws collapse to plain Poisson.
    pub fn unit() -> Self {
        let pmf = Pmf {
            probs: vec![0.0, 1.0],
            tail_mass: 0.0,
        };
        Self { pmf, mean: 1.0 }
    }

    /// Unit mass at `k >= 1`.
    pub fn point(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::SeverityMassAtZero { value: 1.0 });
        }
        let pmf = Pmf::point_mass(k)?;
        Ok(Self {
            pmf,
            mean: k as f64,
        })
    }

    /// Geometric severity `Q(j) = (1 - alpha) alpha^(j-1)` on `{1, 2, ...}`,
    /// truncated at the smallest `N` with `alpha^N <= epsilon` (capped by
    /// `max_support`); the exact leftover `alpha^N` is kept as tail mass and
    /// the exact mean `1 / (1 - alpha)` is stored.
    pub fn geometric(alpha: f64, policy: &TruncationPolicy) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter {
                what: "alpha",
                value: alpha,
                expected: "0 < alpha < 1",
            });
        }
        let mut probs = vec![0.0];
        let mut alpha_pow = 1.0f64; // alpha^(j-1) entering iteration j
        for _ in 1..=policy.max_support() {
            probs.push((1.0 - alpha) * alpha_pow);
            alpha_pow *= alpha;
            if alpha_pow <= policy.epsilon() {
                break;
            }
        }
        let pmf = Pmf::from_raw(probs, alpha_pow);
        Self::with_mean(pmf, 1.0 / (1.0 - alpha))
    }

    /// Mixture `sum_i weights[i] * parts[i]`; weights must sum to 1 within
    /// `1e-12`. Tail budgets mix linearly and the mean is the weighted mean.
    pub fn mixture(weights: &[f64], parts: &[Severity]) -> Result<Self> {
        if weights.len() != parts.len() {
            return Err(Error::LengthMismatch {
                left: weights.len(),
                right: parts.len(),
            });
        }
        if weights.is_empty() {
            return Err(Error::EmptySpec);
        }
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::BadProbability { index, value: w });
            }
        }
        let weight_sum = kahan_total(weights);
        if (weight_sum - 1.0).abs() > CONSERVATION_TOL {
            return Err(Error::BadMixtureWeights { sum: weight_sum });
        }
        let len = parts.iter().map(|s| s.pmf.len()).max().unwrap();
        let mut acc = vec![KahanSum::new(); len];
        let mut tail = KahanSum::new();
        let mut mean = KahanSum::new();
        for (&w, part) in weights.iter().zip(parts) {
            for (k, &p) in part.pmf.probs().iter().enumerate() {
                acc[k].add(w * p);
            }
            tail.add(w * part.pmf.tail_mass());
            mean.add(w * part.mean);
        }
        let probs: Vec<f64> = acc.iter().map(KahanSum::value).collect();
        let pmf = Pmf::from_raw(probs, tail.value());
        Self::with_mean(pmf, mean.value())
    }

    /// The underlying truncated pmf.
    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }

    /// `Q(j)`, zero beyond the stored support.
    #[inline]
    pub fn prob(&self, j: usize) -> f64 {
        self.pmf.prob(j)
    }

    /// The severity mean `q = sum_j j Q(j)` (exact where a closed form
    /// exists, stored-support mean otherwise).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Whether the severity is positive on its whole truncated range
    /// `{1, ..., N}` *and* keeps mass beyond it — the stored face of an
    /// infinite-support law. Finite-support severities (unit, point masses)
    /// report `false`.
    pub fn full_support(&self) -> bool {
        self.pmf.tail_mass() > 0.0 && self.pmf.probs()[1..].iter().all(|&p| p > 0.0)
    }

    /// Whether `j Q(j)` is non-increasing over the stored support. This is
    /// the monotonicity condition selecting the favourable branch of the
    /// Stein factors; geometric severities satisfy it exactly when
    /// `alpha < 1/2`.
    pub fn jq_non_increasing(&self) -> bool {
        let q = self.pmf.probs();
        for j in 1..q.len() - 1 {
            if (j + 1) as f64 * q[j + 1] > j as f64 * q[j] {
                return false;
            }
        }
        true
    }
}
