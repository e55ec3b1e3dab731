//! Compound distributions: random sums, compound Bernoulli summands, their
//! convolutions, and the compound Poisson law.
//!
//! The central object is [`SumSpec`]: a list of independent summands, each a
//! compound Bernoulli variable `B_i * X_i` with firing probability `p_i` and
//! severity `Q_i`. The matched compound Poisson approximation uses rate
//! `lambda = sum_i p_i` and the mixture severity `Q = sum_i (p_i / lambda) Q_i`,
//! so both laws share mean `lambda * q`.
//!
//! Compound Poisson pmfs are evaluated with the Katti–Panjer recursion
//! `k P(k) = lambda * sum_j j Q(j) P(k - j)`, which involves only additions
//! and multiplications of non-negative terms and is therefore forward
//! stable. The direct Poisson mixture of convolution powers lives in
//! [`crate::reference`] purely as a cross-check.

use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::pmf::{Pmf, Severity, TruncationPolicy};

/// Largest number of summands accepted in a [`SumSpec`].
pub const MAX_SUMMANDS: usize = 5000;

/// One independent summand: fires with probability `p` and then draws its
/// value from `severity`.
#[derive(Clone, Debug)]
pub struct SummandSpec {
    p: f64,
    severity: Severity,
}

impl SummandSpec {
    /// Builds a summand, requiring `0 < p < 1`.
    pub fn new(p: f64, severity: Severity) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter {
                what: "p",
                value: p,
                expected: "0 < p < 1",
            });
        }
        Ok(Self { p, severity })
    }

    /// The firing probability.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// The severity drawn when the summand fires.
    pub fn severity(&self) -> &Severity {
        &self.severity
    }

    /// The summand's own pmf `(1 - p) delta_0 + p Q`.
    pub fn pmf(&self) -> Pmf {
        compound_bernoulli(self.p, &self.severity).expect("validated at construction")
    }
}

/// A sum of independent compound Bernoulli summands together with the
/// derived quantities of its compound Poisson approximation.
#[derive(Clone, Debug)]
pub struct SumSpec {
    summands: Vec<SummandSpec>,
    lambda: f64,
    mixture_q: Severity,
    q: f64,
    policy: TruncationPolicy,
}

impl SumSpec {
    /// Builds a spec from summands, deriving `lambda = sum p_i`, the mixture
    /// severity with weights `p_i / lambda`, and its mean `q`.
    pub fn new(summands: Vec<SummandSpec>, policy: TruncationPolicy) -> Result<Self> {
        if summands.is_empty() {
            return Err(Error::EmptySpec);
        }
        if summands.len() > MAX_SUMMANDS {
            return Err(Error::DeskScale {
                what: "summands",
                got: summands.len(),
                max: MAX_SUMMANDS,
            });
        }
        let mut lambda_acc = KahanSum::new();
        for s in &summands {
            lambda_acc.add(s.p);
        }
        let lambda = lambda_acc.value();
        let weights: Vec<f64> = summands.iter().map(|s| s.p / lambda).collect();
        let severities: Vec<Severity> =
            summands.iter().map(|s| s.severity.clone()).collect();
        let mixture_q = Severity::mixture(&weights, &severities)?;
        let q = mixture_q.mean();
        Ok(Self {
            summands,
            lambda,
            mixture_q,
            q,
            policy,
        })
    }

    /// A spec of `n` identical summands.
    pub fn homogeneous(
        n: usize,
        p: f64,
        severity: &Severity,
        policy: TruncationPolicy,
    ) -> Result<Self> {
        let summand = SummandSpec::new(p, severity.clone())?;
        Self::new(vec![summand; n], policy)
    }

    /// The summands.
    pub fn summands(&self) -> &[SummandSpec] {
        &self.summands
    }

    /// Number of summands.
    pub fn n(&self) -> usize {
        self.summands.len()
    }

    /// The matched compound Poisson rate `sum_i p_i`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The mixture severity `sum_i (p_i / lambda) Q_i`.
    pub fn mixture_q(&self) -> &Severity {
        &self.mixture_q
    }

    /// Mean of the mixture severity.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// The truncation policy all derived distributions are built under.
    pub fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    /// Whether all severities agree pointwise within `1e-12` on the union of
    /// their stored supports — the applicability condition of the
    /// identical-severity bounds.
    pub fn severities_identical(&self) -> bool {
        let first = self.summands[0].severity.pmf();
        self.summands[1..]
            .iter()
            .all(|s| s.severity.pmf().sup_distance(first) <= 1e-12)
    }
}

/// The compound law `sum_{y} R(y) * Q^(*y)`: draw a count from `counts`,
/// then add that many independent severities.
///
/// Mass truncated by the support cap, together with the operands' tail
/// budgets, ends up in the result's tail (computed as `1 - stored`, never by
/// renormalising).
pub fn compound(q: &Severity, counts: &Pmf, policy: &TruncationPolicy) -> Pmf {
    let mut acc: Vec<KahanSum> = vec![KahanSum::new()];
    let mut power = Pmf::point_mass(0).expect("0 is within the cap");
    for y in 0..counts.len() {
        let w = counts.prob(y);
        if w > 0.0 {
            if power.len() > acc.len() {
                acc.resize(power.len(), KahanSum::new());
            }
            for (idx, &p) in power.probs().iter().enumerate() {
                if p > 0.0 {
                    acc[idx].add(w * p);
                }
            }
        }
        if y + 1 < counts.len() {
            power = power.convolve_with_policy(q.pmf(), policy);
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

/// The compound Bernoulli pmf `(1 - p) delta_0 + p Q`.
pub fn compound_bernoulli(p: f64, q: &Severity) -> Result<Pmf> {
    if !(p > 0.0 && p < 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter {
            what: "p",
            value: p,
            expected: "0 < p < 1",
        });
    }
    let mut probs = vec![0.0; q.pmf().len()];
    probs[0] = 1.0 - p;
    for (j, &qj) in q.pmf().probs().iter().enumerate().skip(1) {
        probs[j] = p * qj;
    }
    Ok(Pmf::from_raw(probs, p * q.pmf().tail_mass()))
}

/// The compound Poisson pmf `CPo(lambda, Q)` by the Katti–Panjer recursion.
///
/// `P(0) = e^-lambda` (severities put no mass at 0) and for `k >= 1`
///
/// ```text
/// P(k) = (lambda / k) * sum_{j=1..min(k, N_Q)} j Q(j) P(k - j).
/// ```
///
/// All terms are non-negative, so the forward pass is numerically stable.
/// The recursion stops once cumulative mass reaches `1 - epsilon` or the
/// support cap; the remainder is tail mass.
pub fn compound_poisson(lambda: f64, q: &Severity, policy: &TruncationPolicy) -> Result<Pmf> {
    compound_poisson_min_len(lambda, q, policy, 0)
}

/// As [`compound_poisson`], but keeps recursing until at least `min_len`
/// entries exist (still capped by the policy). Used internally when the law
/// serves as a relative-entropy reference and must cover the support of the
/// distribution compared against it.
pub(crate) fn compound_poisson_min_len(
    lambda: f64,
    q: &Severity,
    policy: &TruncationPolicy,
    min_len: usize,
) -> Result<Pmf> {
    if !(lambda > 0.0 && lambda <= 700.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter {
            what: "lambda",
            value: lambda,
            expected: "0 < lambda <= 700",
        });
    }
    let min_len = min_len.min(policy.max_support() + 1);
    let jq: Vec<f64> = q
        .pmf()
        .probs()
        .iter()
        .enumerate()
        .map(|(j, &qj)| j as f64 * qj)
        .collect();
    let mut probs = Vec::with_capacity(64);
    probs.push((-lambda).exp());
    let mut cum = KahanSum::new();
    cum.add(probs[0]);
    let mut k = 0usize;
    while k < policy.max_support() {
        if cum.value() >= 1.0 - policy.epsilon() && probs.len() >= min_len {
            break;
        }
        k += 1;
        let mut s = KahanSum::new();
        let j_max = k.min(jq.len() - 1);
        for j in 1..=j_max {
            s.add(jq[j] * probs[k - j]);
        }
        let pk = lambda / k as f64 * s.value();
        probs.push(pk);
        cum.add(pk);
    }
    let tail = (1.0 - cum.value()).max(0.0);
    Ok(Pmf::from_raw(probs, tail))
}

/// The distribution of the full sum: the convolution of all summand pmfs,
/// folded left to right under the spec's truncation policy.
pub fn sum_distribution(spec: &SumSpec) -> Pmf {
    let mut out = Pmf::point_mass(0).expect("0 is within the cap");
    for s in spec.summands() {
        out = out.convolve_with_policy(&s.pmf(), spec.policy());
    }
    out
}

/// The leave-one-out distribution: the sum with summand `i` removed.
pub fn leave_one_out(spec: &SumSpec, i: usize) -> Result<Pmf> {
    if i >= spec.n() {
        return Err(Error::SummandIndex {
            index: i,
            len: spec.n(),
        });
    }
    let mut out = Pmf::point_mass(0).expect("0 is within the cap");
    for (j, s) in spec.summands().iter().enumerate() {
        if j != i {
            out = out.convolve_with_policy(&s.pmf(), spec.policy());
        }
    }
    Ok(out)
}

/// All `n` leave-one-out distributions at once via prefix/suffix partial
/// convolutions: `2n` convolutions total instead of `n * (n - 1)`.
pub(crate) fn leave_one_out_all(spec: &SumSpec) -> Vec<Pmf> {
    let n = spec.n();
    let policy = spec.policy();
    let pieces: Vec<Pmf> = spec.summands().iter().map(SummandSpec::pmf).collect();
    let unit = Pmf::point_mass(0).expect("0 is within the cap");
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(unit.clone());
    for piece in &pieces {
        let next = prefix.last().unwrap().convolve_with_policy(piece, policy);
        prefix.push(next);
    }
    let mut suffix = vec![unit; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1].convolve_with_policy(&pieces[i], policy);
    }
    (0..n)
        .map(|i| prefix[i].convolve_with_policy(&suffix[i + 1], policy))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    fn policy() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    #[test]
    fn compound_with_bernoulli_counts_hand_values() {
        // Counts Bern(0.4), severity Geom(0.3): the law is
        // 0.6 delta_0 + 0.4 Geom(0.3).
        let q = Severity::geometric(0.3, &policy()).unwrap();
        let counts = Pmf::new(vec![0.6, 0.4], 0.0).unwrap();
        let c = compound(&q, &counts, &policy());
        assert!((c.prob(0) - 0.6).abs() < 1e-15);
        assert!((c.prob(1) - 0.4 * 0.7).abs() < 1e-15);
        assert!((c.prob(2) - 0.4 * 0.7 * 0.3).abs() < 1e-15);
        assert!((c.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compound_bernoulli_hand_values() {
        let q = Severity::geometric(0.5, &policy()).unwrap();
        let c = compound_bernoulli(0.2, &q).unwrap();
        assert!((c.prob(0) - 0.8).abs() < 1e-15);
        assert!((c.prob(1) - 0.2 * 0.5).abs() < 1e-15);
        assert!((c.prob(2) - 0.05).abs() < 1e-15);
        assert!((c.total_mass() - 1.0).abs() < 1e-12);
        assert!(compound_bernoulli(0.0, &q).is_err());
        assert!(compound_bernoulli(1.0, &q).is_err());
    }

    #[test]
    fn compound_poisson_with_unit_severity_is_poisson() {
        for &lambda in &[0.5, 1.0, 5.0] {
            let cpo = compound_poisson(lambda, &Severity::unit(), &policy()).unwrap();
            let po = reference::poisson_pmf(lambda, &policy());
            assert!(cpo.sup_distance(&po) < 1e-13, "lambda = {lambda}");
        }
    }

    #[test]
    fn compound_poisson_point_two_severity_hand_values() {
        // All jumps of size 2: mass sits on even integers with Poisson
        // weights; P(2) = 2 e^-2 and P(4) = 2 e^-2 for lambda = 2.
        let cpo = compound_poisson(2.0, &Severity::point(2).unwrap(), &policy()).unwrap();
        let e2 = (-2.0f64).exp();
        assert!((cpo.prob(0) - e2).abs() < 1e-15);
        assert_eq!(cpo.prob(1), 0.0);
        assert!((cpo.prob(2) - 2.0 * e2).abs() < 1e-14);
        assert_eq!(cpo.prob(3), 0.0);
        assert!((cpo.prob(4) - 2.0 * e2).abs() < 1e-14);
    }

    #[test]
    fn panjer_matches_poisson_mixture_oracle() {
        let q = Severity::geometric(0.3, &policy()).unwrap();
        let recursive = compound_poisson(2.0, &q, &policy()).unwrap();
        let oracle = reference::poisson_mixture_cpo(2.0, &q, &policy());
        assert!(recursive.sup_distance(&oracle) < 1e-12);
    }

    #[test]
    fn compound_poisson_validates_lambda() {
        let q = Severity::unit();
        assert!(compound_poisson(0.0, &q, &policy()).is_err());
        assert!(compound_poisson(-1.0, &q, &policy()).is_err());
        assert!(compound_poisson(701.0, &q, &policy()).is_err());
    }

    #[test]
    fn min_len_extension_is_consistent_with_plain_run() {
        let q = Severity::geometric(0.2, &policy()).unwrap();
        let plain = compound_poisson(1.0, &q, &policy()).unwrap();
        let extended = compound_poisson_min_len(1.0, &q, &policy(), 200).unwrap();
        assert!(extended.len() >= 200);
        // The extension replays the same recursion, so shared entries agree
        // exactly.
        for k in 0..plain.len() {
            assert_eq!(plain.prob(k), extended.prob(k));
        }
        assert!((extended.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_unit_coin_flips_sum_hand_values() {
        let spec = SumSpec::homogeneous(2, 0.5, &Severity::unit(), policy()).unwrap();
        let s = sum_distribution(&spec);
        assert!((s.prob(0) - 0.25).abs() < 1e-15);
        assert!((s.prob(1) - 0.5).abs() < 1e-15);
        assert!((s.prob(2) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn spec_derives_rate_and_mixture() {
        let p = policy();
        let summands = vec![
            SummandSpec::new(0.5, Severity::point(1).unwrap()).unwrap(),
            SummandSpec::new(0.5, Severity::point(2).unwrap()).unwrap(),
        ];
        let spec = SumSpec::new(summands, p).unwrap();
        assert!((spec.lambda() - 1.0).abs() < 1e-15);
        assert!((spec.mixture_q().prob(1) - 0.5).abs() < 1e-15);
        assert!((spec.mixture_q().prob(2) - 0.5).abs() < 1e-15);
        assert!((spec.q() - 1.5).abs() < 1e-15);
        assert!(!spec.severities_identical());
    }

    #[test]
    fn homogeneous_spec_has_identical_severities() {
        let q = Severity::geometric(0.2, &policy()).unwrap();
        let spec = SumSpec::homogeneous(5, 0.1, &q, policy()).unwrap();
        assert!(spec.severities_identical());
        assert!((spec.lambda() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sum_mean_matches_sum_of_summand_means() {
        let p = policy();
        let summands = vec![
            SummandSpec::new(0.2, Severity::geometric(0.3, &p).unwrap()).unwrap(),
            SummandSpec::new(0.4, Severity::geometric(0.5, &p).unwrap()).unwrap(),
            SummandSpec::new(0.1, Severity::point(3).unwrap()).unwrap(),
        ];
        let spec = SumSpec::new(summands, p).unwrap();
        let expected: f64 = spec
            .summands()
            .iter()
            .map(|s| s.p() * s.severity().mean())
            .sum();
        let s = sum_distribution(&spec);
        assert!((s.mean() - expected).abs() < 1e-9);
        assert!((s.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn leave_one_out_drops_exactly_one_summand() {
        let p = policy();
        let summands = vec![
            SummandSpec::new(0.2, Severity::point(1).unwrap()).unwrap(),
            SummandSpec::new(0.3, Severity::point(2).unwrap()).unwrap(),
            SummandSpec::new(0.4, Severity::point(3).unwrap()).unwrap(),
        ];
        let spec = SumSpec::new(summands, p).unwrap();
        let f1 = leave_one_out(&spec, 1).unwrap();
        let direct = spec.summands()[0]
            .pmf()
            .convolve_with_policy(&spec.summands()[2].pmf(), &p);
        assert!(f1.sup_distance(&direct) < 1e-15);
        assert!(leave_one_out(&spec, 3).is_err());
    }

    #[test]
    fn leave_one_out_cache_agrees_with_direct_recomputation() {
        let p = policy();
        let summands = vec![
            SummandSpec::new(0.15, Severity::geometric(0.2, &p).unwrap()).unwrap(),
            SummandSpec::new(0.25, Severity::geometric(0.35, &p).unwrap()).unwrap(),
            SummandSpec::new(0.05, Severity::unit()).unwrap(),
            SummandSpec::new(0.4, Severity::geometric(0.45, &p).unwrap()).unwrap(),
        ];
        let spec = SumSpec::new(summands, p).unwrap();
        let all = leave_one_out_all(&spec);
        assert_eq!(all.len(), 4);
        for i in 0..4 {
            let direct = leave_one_out(&spec, i).unwrap();
            assert!(
                all[i].sup_distance(&direct) < 1e-14,
                "cache disagrees at index {i}"
            );
        }
    }

    #[test]
    fn spec_validates_inputs() {
        let p = policy();
        assert!(SumSpec::new(vec![], p).is_err());
        assert!(SummandSpec::new(0.0, Severity::unit()).is_err());
        assert!(SummandSpec::new(1.0, Severity::unit()).is_err());
        assert!(SumSpec::homogeneous(5001, 0.1, &Severity::unit(), p).is_err());
    }
}
