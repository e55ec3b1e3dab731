//! Distances between truncated pmfs: total variation, relative entropy, and
//! the Pinsker transfer from one to the other.
//!
//! Results carry an `error_budget` quantifying how much the truncation tails
//! could move the reported value, so "exact" distances stay honest about the
//! finite supports they were computed on.

use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::pmf::Pmf;

/// Entries of the left pmf at or below this floor are treated as truncation
/// noise when the reference has no mass there: they are skipped (and added
/// to the budget) instead of producing a spurious infinite divergence.
pub const KL_SUPPORT_FLOOR: f64 = 1e-15;

/// A distance value together with the truncation budget that applies to it.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DistanceResult {
    /// The computed distance (may be `+inf` for relative entropy).
    pub value: f64,
    /// How far truncation tails could shift the value: half the combined
    /// tail mass for total variation; skipped mass plus the left tail for
    /// relative entropy.
    pub error_budget: f64,
}

/// Total variation distance `(1/2) sum_k |a(k) - b(k)|` over the union of
/// stored supports.
///
/// The budget is `(tail_a + tail_b) / 2`: however the unstored mass is
/// arranged, it cannot move the distance by more than that.
pub fn total_variation(a: &Pmf, b: &Pmf) -> DistanceResult {
    let len = a.len().max(b.len());
    let mut acc = KahanSum::new();
    for k in 0..len {
        acc.add((a.prob(k) - b.prob(k)).abs());
    }
    DistanceResult {
        value: 0.5 * acc.value(),
        error_budget: 0.5 * (a.tail_mass() + b.tail_mass()),
    }
}

/// Relative entropy `D(p || reference) = sum_k p(k) ln(p(k) / reference(k))`
/// in nats, over the stored support of `p`.
///
/// Where the reference stores no mass: left entries above
/// [`KL_SUPPORT_FLOOR`] make the divergence infinite (genuine support
/// violation); entries at or below the floor are truncation noise and are
/// skipped, with their mass added to the budget. The budget also carries the
/// left tail mass.
pub fn relative_entropy(p: &Pmf, reference: &Pmf) -> DistanceResult {
    let mut acc = KahanSum::new();
    let mut skipped = KahanSum::new();
    let mut infinite = false;
    for (k, &pk) in p.probs().iter().enumerate() {
        if pk <= 0.0 {
            continue;
        }
        let rk = reference.prob(k);
        if rk <= 0.0 {
            if pk > KL_SUPPORT_FLOOR {
                infinite = true;
                break;
            }
            skipped.add(pk);
            continue;
        }
        acc.add(pk * (pk / rk).ln());
    }
    DistanceResult {
        value: if infinite { f64::INFINITY } else { acc.value() },
        error_budget: skipped.value() + p.tail_mass(),
    }
}

/// Pinsker's transfer: total variation is at most `sqrt(d / 2)` when `d`
/// bounds the relative entropy.
pub fn pinsker_bound(d: f64) -> Result<f64> {
    if d < 0.0 || d.is_nan() {
        return Err(Error::InvalidParameter {
            what: "relative entropy",
            value: d,
            expected: ">= 0",
        });
    }
    Ok((d / 2.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::{Severity, TruncationPolicy};
    use crate::reference::poisson_pmf;

    #[test]
    fn tv_of_disjoint_point_masses_is_one() {
        let a = Pmf::point_mass(0).unwrap();
        let b = Pmf::point_mass(1).unwrap();
        let d = total_variation(&a, &b);
        assert!((d.value - 1.0).abs() < 1e-15);
        assert_eq!(d.error_budget, 0.0);
    }

    #[test]
    fn tv_is_symmetric_and_zero_on_equal_inputs() {
        let policy = TruncationPolicy::default();
        let a = Severity::geometric(0.3, &policy).unwrap();
        let b = Severity::geometric(0.5, &policy).unwrap();
        let ab = total_variation(a.pmf(), b.pmf());
        let ba = total_variation(b.pmf(), a.pmf());
        assert_eq!(ab.value, ba.value);
        assert_eq!(total_variation(a.pmf(), a.pmf()).value, 0.0);
    }

    #[test]
    fn tv_bernoulli_vs_poisson_half_hand_value() {
        // Direct evaluation: entries 0 and 1 differ by |1/2 - e^-1/2| and
        // |1/2 - e^-1/2 / 2|; everything else is Poisson tail.
        let b = Pmf::new(vec![0.5, 0.5], 0.0).unwrap();
        let po = poisson_pmf(0.5, &TruncationPolicy::default());
        let e = (-0.5f64).exp();
        let expected = 0.5 * ((0.5 - e).abs() + (0.5 - 0.5 * e).abs() + (1.0 - e - 0.5 * e));
        let d = total_variation(&b, &po);
        assert!((d.value - expected).abs() < 1e-12);
    }

    #[test]
    fn tv_budget_is_half_the_tails() {
        let a = Pmf::new(vec![0.5, 0.5 - 1e-8], 1e-8).unwrap();
        let b = Pmf::new(vec![0.25, 0.75 - 2e-8], 2e-8).unwrap();
        let d = total_variation(&a, &b);
        assert!((d.error_budget - 1.5e-8).abs() < 1e-20);
    }

    #[test]
    fn kl_zero_on_identical_inputs() {
        let policy = TruncationPolicy::default();
        let q = Severity::geometric(0.4, &policy).unwrap();
        let d = relative_entropy(q.pmf(), q.pmf());
        assert!(d.value.abs() < 1e-14);
    }

    #[test]
    fn kl_bernoulli_vs_poisson_hand_value() {
        let b = Pmf::new(vec![0.5, 0.5], 0.0).unwrap();
        let po = poisson_pmf(0.5, &TruncationPolicy::default());
        // D = 0.5 ln(0.5 / e^-0.5) + 0.5 ln(0.5 / (0.5 e^-0.5))
        //   = 0.5 ln(0.5) + 0.5.
        let expected = 0.5 * 0.5f64.ln() + 0.5;
        let d = relative_entropy(&b, &po);
        assert!((d.value - expected).abs() < 1e-12);
        assert!(d.value >= 0.0);
    }

    #[test]
    fn kl_detects_genuine_support_violation() {
        let p = Pmf::new(vec![0.25, 0.25, 0.5], 0.0).unwrap();
        let r = Pmf::new(vec![0.5, 0.5], 0.0).unwrap();
        let d = relative_entropy(&p, &r);
        assert!(d.value.is_infinite());
    }

    #[test]
    fn kl_skips_truncation_noise_and_budgets_it() {
        let noise = 1e-16;
        let p = Pmf::new(vec![0.5, 0.5 - noise, noise], 0.0).unwrap();
        let r = Pmf::new(vec![0.5, 0.5], 0.0).unwrap();
        let d = relative_entropy(&p, &r);
        assert!(d.value.is_finite());
        assert!(d.value.abs() < 1e-12);
        assert!((d.error_budget - noise).abs() < 1e-20);
    }

    #[test]
    fn pinsker_hand_values() {
        assert!((pinsker_bound(2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((pinsker_bound(0.25).unwrap() - 0.125f64.sqrt()).abs() < 1e-15);
        assert_eq!(pinsker_bound(f64::INFINITY).unwrap(), f64::INFINITY);
        assert!(pinsker_bound(-0.1).is_err());
    }

    #[test]
    fn pinsker_inequality_on_bernoulli_poisson_pair() {
        let b = Pmf::new(vec![0.5, 0.5], 0.0).unwrap();
        let po = poisson_pmf(0.5, &TruncationPolicy::default());
        let tv = total_variation(&b, &po);
        let kl = relative_entropy(&b, &po);
        assert!(tv.value <= pinsker_bound(kl.value).unwrap() + 1e-9);
    }
}
