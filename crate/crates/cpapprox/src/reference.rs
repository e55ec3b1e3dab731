//! Slow, direct reference constructions.
//!
//! These exist to cross-check the recursive production paths and are kept
//! deliberately independent of them: the compound Poisson reference below is
//! a plain Poisson mixture of convolution powers, sharing nothing with the
//! recursion in [`crate::compound::compound_poisson`] except elementary pmf
//! arithmetic. Tests compare the two routes; production code should prefer
//! the recursive path, which is faster and numerically forward-stable.

use crate::numeric::KahanSum;
use crate::pmf::{Pmf, Severity, TruncationPolicy};

/// Poisson(lambda) pmf by the classic recurrence
/// `P(k+1) = P(k) * lambda / (k+1)`, starting from `P(0) = e^-lambda`.
///
/// The recurrence multiplies positive terms only, so each entry is accurate
/// to a few ulps. Construction stops once the cumulative mass reaches
/// `1 - epsilon` (or the support cap); the remainder becomes tail mass.
pub fn poisson_pmf(lambda: f64, policy: &TruncationPolicy) -> Pmf {
    assert!(lambda > 0.0 && lambda <= 700.0, "lambda out of range: {lambda}");
    let mut probs = vec![(-lambda).exp()];
    let mut cum = KahanSum::new();
    cum.add(probs[0]);
    let mut k = 0usize;
    while k < policy.max_support() && cum.value() < 1.0 - policy.epsilon() {
        let next = probs[k] * lambda / (k as f64 + 1.0);
        probs.push(next);
        cum.add(next);
        k += 1;
    }
    let tail = (1.0 - cum.value()).max(0.0);
    Pmf::from_raw(probs, tail)
}

/// Compound Poisson law built literally as the Poisson mixture of
/// convolution powers: `sum_k P(Po(lambda) = k) * Q^(*k)`.
///
/// The mixture index is truncated at `k <= ceil(8 * lambda + 30)`, far past
/// any visible Poisson mass for desk-scale rates; whatever weight and
/// convolution mass fall outside the stored support are left in the tail
/// budget. Quadratic in the support and linear in the cut-off — use only as
/// a cross-check.
pub fn poisson_mixture_cpo(lambda: f64, q: &Severity, policy: &TruncationPolicy) -> Pmf {
    assert!(lambda > 0.0 && lambda <= 700.0, "lambda out of range: {lambda}");
    let k_max = (8.0 * lambda + 30.0).ceil() as usize;
    let mut acc: Vec<KahanSum> = vec![KahanSum::new()];
    let mut weight = (-lambda).exp(); // P(Po(lambda) = k)
    let mut power = Pmf::point_mass(0).expect("0 is within the cap"); // Q^(*k)
    for k in 0..=k_max {
        if weight > 0.0 {
            if power.len() > acc.len() {
                acc.resize(power.len(), KahanSum::new());
            }
            for (idx, &p) in power.probs().iter().enumerate() {
                if p > 0.0 {
                    acc[idx].add(weight * p);
                }
            }
        }
        if k < k_max {
            power = power.convolve_with_policy(q.pmf(), policy);
            weight *= lambda / (k as f64 + 1.0);
        }
    }
    let probs: Vec<f64> = acc.iter().map(KahanSum::value).collect();
    let mut stored = KahanSum::new();
    for &p in &probs {
        stored.add(p);
    }
    let tail = (1.0 - stored.value()).max(0.0);
    Pmf::from_raw(probs, tail)
}
