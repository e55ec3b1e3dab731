//! Stein factors and compound-Poisson approximation bounds.
//!
//! Every bound here upper-estimates the distance between the law of a
//! compound Bernoulli sum `S = sum B_i X_i` and the matched compound
//! Poisson law `CPo(lambda, Q)` with `lambda = sum p_i` and `Q` the
//! `p_i`-weighted severity mixture. The seven classical and
//! information-theoretic bounds are exposed individually — each returns a
//! number directly comparable to the exact total variation distance — and
//! [`full_report`] aggregates all of them next to the exactly computed
//! distances.
//!
//! Applicability differs per bound: some require identical severities,
//! some full severity support, some a non-increasing `{j Q(j)}` sequence.
//! Inapplicable bounds come back as `None` (rendered `NA` in reports)
//! rather than silently computing something the theorem does not cover.

use crate::compound::{compound_poisson_min_len, sum_distribution, SumSpec};
use crate::divergence::{relative_entropy, total_variation, DistanceResult};
use crate::error::Result;
use crate::information::{j1_size_biased, j2_katti_panjer};
use crate::numeric::KahanSum;
use crate::pmf::{Pmf, Severity};

/// A Stein factor above this is reported but flagged vacuous: any total
/// variation bound beyond 1 carries no information, and the exponential
/// branch of the factor exceeds this threshold long before overflow.
pub const H_VACUOUS_THRESHOLD: f64 = 1e6;

/// Hard clamp for the exponential Stein-factor branch, applied in log
/// domain so `exp(lambda)` can never overflow to infinity.
pub const H_CLAMP: f64 = 1e300;

/// Sup-norm bounds on solutions of the compound Poisson Stein equation,
/// as used by the total-variation bounds in this module.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteinFactors {
    /// `1 / (lambda (Q(1) - 2 Q(2)))`. Meaningful for non-increasing
    /// `{j Q(j)}` (which forces the denominator `>= 0`); set to infinity
    /// whenever the denominator is non-positive.
    pub delta: f64,
    /// `1` if `delta >= 1`, else `sqrt(delta) (2 - sqrt(delta))`. In
    /// `(0, 1]`.
    pub h0: f64,
    /// The Stein factor `H(lambda, Q)`: `h0` when `{j Q(j)}` is
    /// non-increasing, else `exp(lambda) min{1, 1/(lambda Q(1))}` (clamped
    /// at [`H_CLAMP`]).
    pub h: f64,
    /// `min{1, delta (delta/4 + log+(2/delta))}`, defined only for
    /// non-increasing `{j Q(j)}`; in `(0, 1]`.
    pub g: Option<f64>,
    /// Whether `{j Q(j)}` is non-increasing over the truncated support.
    pub monotone_jq: bool,
    /// True when `h` exceeds [`H_VACUOUS_THRESHOLD`]; bounds scaled by it
    /// are then uninformative.
    pub vacuous: bool,
}

/// Computes the Stein factors for rate `lambda` and severity `q`.
///
/// The monotonicity of `{j Q(j)}` is checked over the whole truncated
/// support; a truncated tail cannot misclassify a genuinely monotone
/// sequence because the check covers every stored term.
pub fn stein_factors(lambda: f64, q: &Severity) -> SteinFactors {
    assert!(lambda > 0.0, "Stein factors need lambda > 0, got {lambda}");
    let monotone_jq = q.jq_non_increasing();
    let q1 = q.prob(1);
    let q2 = q.prob(2);
    let denom = lambda * (q1 - 2.0 * q2);
    // Monotone {jQ(j)} means Q(1) >= 2 Q(2) termwise, so a negative
    // denominator together with monotonicity is an internal inconsistency.
    assert!(
        !monotone_jq || denom >= 0.0,
        "monotone jQ with Q(1) < 2 Q(2) is impossible"
    );
    let delta = if denom > 0.0 {
        1.0 / denom
    } else {
        f64::INFINITY
    };
    let h0 = if delta >= 1.0 {
        1.0
    } else {
        let s = delta.sqrt();
        s * (2.0 - s)
    };
    let h = if monotone_jq {
        h0
    } else {
        // exp(lambda) * min{1, 1/(lambda Q(1))} in log domain.
        let log_min = if lambda * q1 > 1.0 {
            -(lambda * q1).ln()
        } else {
            0.0
        };
        let log_h = lambda + log_min;
        if log_h >= H_CLAMP.ln() {
            H_CLAMP
        } else {
            log_h.exp()
        }
    };
    let g = if monotone_jq {
        Some(if delta.is_infinite() {
            // delta (delta/4 + ...) grows without bound, so the min caps
            // it at 1.
            1.0
        } else {
            let log_plus = (2.0 / delta).ln().max(0.0);
            (delta * (delta / 4.0 + log_plus)).min(1.0)
        })
    } else {
        None
    };
    SteinFactors {
        delta,
        h0,
        h,
        g,
        monotone_jq,
        vacuous: h > H_VACUOUS_THRESHOLD,
    }
}

/// Relative entropy bound `(1/lambda) sum_i p_i^3 / (1 - p_i)` for sums
/// with identical severities; `None` when the severities differ (the
/// underlying theorem assumes i.i.d. jump sizes).
pub fn bound_thm1(spec: &SumSpec) -> Option<f64> {
    if !spec.severities_identical() {
        return None;
    }
    let mut acc = KahanSum::new();
    for s in spec.summands() {
        let p = s.p();
        acc.add(p * p * p / (1.0 - p));
    }
    Some(acc.value() / spec.lambda())
}

/// Total variation form of [`bound_thm1`] via Pinsker's inequality:
/// `sqrt(bound_thm1 / 2)`.
pub fn bound_thm1_tv(spec: &SumSpec) -> Option<f64> {
    bound_thm1(spec).map(|b| (b / 2.0).sqrt())
}

/// Closed form of [`bound_thm1_tv`] for `n` summands with one shared `p`:
/// the bound collapses to `p / sqrt(2 (1 - p))`, independent of `n`.
pub fn thm1_tv_equal_p(p: f64) -> f64 {
    p / (2.0 * (1.0 - p)).sqrt()
}

/// Severity dissimilarity
/// `D = sum_{j>=1} sum_i (j p_i / q) |Q_i(j) - Q(j)|`,
/// where `Q` is the mixture severity and `q` its mean. Vanishes exactly
/// when all severities coincide.
pub fn dissimilarity(spec: &SumSpec) -> f64 {
    let q_mix = spec.mixture_q();
    let q_mean = spec.q();
    let mut acc = KahanSum::new();
    for summand in spec.summands() {
        let qi = summand.severity();
        let longest = qi.pmf().len().max(q_mix.pmf().len());
        for j in 1..longest {
            let diff = (qi.prob(j) - q_mix.prob(j)).abs();
            if diff > 0.0 {
                acc.add(j as f64 * summand.p() / q_mean * diff);
            }
        }
    }
    acc.value()
}

/// Size-biasing total variation bound
/// `H(lambda, Q) q { [sum_i p_i^3/(1-p_i)]^{1/2} + D }`.
///
/// With `use_j1 = true` the bracketed square root is replaced by the
/// sharper `sqrt(lambda J_1(S))` — the theorem's stated form upper-bounds
/// it — at the cost of computing the sum's distribution.
pub fn bound_thm2(spec: &SumSpec, use_j1: bool) -> f64 {
    let factors = stein_factors(spec.lambda(), spec.mixture_q());
    let core = if use_j1 {
        (spec.lambda() * j1_size_biased(spec).value).sqrt()
    } else {
        let mut acc = KahanSum::new();
        for s in spec.summands() {
            let p = s.p();
            acc.add(p * p * p / (1.0 - p));
        }
        acc.value().sqrt()
    };
    factors.h * spec.q() * (core + dissimilarity(spec))
}

/// The severity functional
/// `K(Q) = sum_y Q(y) y^2 (Q^{*2}(y) / (2 Q(y)) - 1)^2`
/// over the stored support; `None` unless `Q` is positive on its whole
/// stored range *and* carries tail mass (a stand-in for full support on
/// the positive integers — a finitely supported severity like the unit
/// mass is excluded by the underlying theorem).
///
/// The summand grows like `y^4 Q(y)`, so the dropped tail contributes
/// roughly `tail_mass * N^4`; truncate the severity several orders deeper
/// than the target accuracy (two-level refinement, e.g. epsilons `1e-18`
/// and `1e-21`, agrees to `1e-8` for geometric severities).
pub fn severity_k(q: &Severity) -> Option<f64> {
    if !q.full_support() {
        return None;
    }
    let conv = q.pmf().convolve(q.pmf());
    let mut acc = KahanSum::new();
    for y in 1..q.pmf().len() {
        let qy = q.prob(y);
        if qy <= 0.0 {
            continue;
        }
        let ratio = conv.prob(y) / (2.0 * qy) - 1.0;
        acc.add(qy * (y * y) as f64 * ratio * ratio);
    }
    Some(acc.value())
}

/// Recursion-information total variation bound
/// `H(lambda, Q) { sum_i p_i^3 K(Q_i) }^{1/2}`; `None` unless every
/// severity has full support.
pub fn bound_thm3(spec: &SumSpec) -> Option<f64> {
    let mut acc = KahanSum::new();
    for s in spec.summands() {
        let k = severity_k(s.severity())?;
        let p = s.p();
        acc.add(p * p * p * k);
    }
    let factors = stein_factors(spec.lambda(), spec.mixture_q());
    Some(factors.h * acc.value().sqrt())
}

/// Le Cam's bound `sum_i p_i^2`; valid for arbitrary severities.
pub fn bound_lecam(spec: &SumSpec) -> f64 {
    let mut acc = KahanSum::new();
    for s in spec.summands() {
        acc.add(s.p() * s.p());
    }
    acc.value()
}

/// The Barbour–Hall improvement `min{1, 1/lambda} sum_i p_i^2`; requires
/// identical severities (the Le Cam–Michel reduction to unit jumps).
pub fn bound_barbour_hall(spec: &SumSpec) -> Option<f64> {
    if !spec.severities_identical() {
        return None;
    }
    Some(1f64.min(1.0 / spec.lambda()) * bound_lecam(spec))
}

/// Roos's equal-severity bound
/// `(3/(4e) + 7 sqrt(t) (3 - 2 sqrt(t)) / (6 (1 - sqrt(t))^2)) t` with
/// `t = lambda^{-1} sum_i p_i^2`; `None` when severities differ or
/// `t >= 1`.
pub fn bound_roos_equal(spec: &SumSpec) -> Option<f64> {
    if !spec.severities_identical() {
        return None;
    }
    roos_equal_from_theta(bound_lecam(spec) / spec.lambda())
}

/// [`bound_roos_equal`] as a function of `theta = lambda^{-1} sum_i p_i^2`
/// alone; `None` outside `0 < theta < 1`. For `n` summands sharing one
/// `p`, `theta = p`.
pub fn roos_equal_from_theta(theta: f64) -> Option<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return None;
    }
    let s = theta.sqrt();
    Some(
        (3.0 / (4.0 * std::f64::consts::E)
            + 7.0 * s * (3.0 - 2.0 * s) / (6.0 * (1.0 - s) * (1.0 - s)))
            * theta,
    )
}

/// `g(z) = 2 z^{-2} e^z (e^{-z} - 1 + z)`, the weight in Roos's general
/// bound. Monotone increasing with `g(0+) = 1`; evaluated by its Taylor
/// series below `z = 0.02` where the direct form cancels catastrophically.
pub fn roos_g(z: f64) -> f64 {
    assert!(z > 0.0, "roos_g needs z > 0, got {z}");
    if z < 0.02 {
        // 2 z^{-2} e^z (e^{-z} - 1 + z)
        //   = 1 + 2z/3 + z^2/4 + z^3/15 + z^4/72 + z^5/420 + O(z^6).
        1.0 + z * (2.0 / 3.0 + z * (0.25 + z * (1.0 / 15.0 + z * (1.0 / 72.0 + z / 420.0))))
    } else {
        2.0 * z.exp() * ((-z).exp_m1() + z) / (z * z)
    }
}

/// Roos's general-severity bound `alpha_2 / (1 - 2 e alpha_2)_+` with
///
/// ```text
/// alpha_2 = sum_i g(2 p_i) p_i^2 min{ q_i^2/(e lambda),
///                                     nu_i/(2^{3/2} lambda), 1 },
/// nu_i    = sum_{y>=1} Q_i(y)^2 / Q(y).
/// ```
///
/// `None` when `{j Q(j)}` is not non-increasing (the simplified form's
/// hypothesis); `Some(infinity)` when `1 - 2 e alpha_2 <= 0`.
pub fn bound_roos_general(spec: &SumSpec) -> Option<f64> {
    let q_mix = spec.mixture_q();
    if !q_mix.jq_non_increasing() {
        return None;
    }
    let lambda = spec.lambda();
    let e = std::f64::consts::E;
    let mut alpha2 = KahanSum::new();
    for s in spec.summands() {
        let p = s.p();
        let qi = s.severity();
        // nu_i over the truncated support; a positive Q_i(y) over a
        // structurally zero mixture cell pushes nu_i to infinity, in
        // which case the min falls back to one of the other branches.
        let mut nu = KahanSum::new();
        let mut nu_infinite = false;
        for y in 1..qi.pmf().len() {
            let qy = qi.prob(y);
            if qy == 0.0 {
                continue;
            }
            let m = q_mix.prob(y);
            if m > 0.0 {
                nu.add(qy * qy / m);
            } else if qy > 1e-15 {
                nu_infinite = true;
            }
        }
        let branch_mean = qi.mean() * qi.mean() / (e * lambda);
        let branch_nu = if nu_infinite {
            f64::INFINITY
        } else {
            nu.value() / (2f64.powf(1.5) * lambda)
        };
        let weight = branch_mean.min(branch_nu).min(1.0);
        alpha2.add(roos_g(2.0 * p) * p * p * weight);
    }
    let a2 = alpha2.value();
    let denom = 1.0 - 2.0 * e * a2;
    if denom <= 0.0 {
        Some(f64::INFINITY)
    } else {
        Some(a2 / denom)
    }
}

/// The Barbour–Chryssaphinou Stein-method bound
/// `G(lambda, Q) sum_i q_i^2 p_i^2`; `None` when `{j Q(j)}` is not
/// non-increasing (the factor `G` is defined only there).
pub fn bound_bcl_stein(spec: &SumSpec) -> Option<f64> {
    let factors = stein_factors(spec.lambda(), spec.mixture_q());
    let g = factors.g?;
    let mut acc = KahanSum::new();
    for s in spec.summands() {
        let q_mean = s.severity().mean();
        acc.add(q_mean * q_mean * s.p() * s.p());
    }
    Some(g * acc.value())
}

/// Localized total variation bound `H(lambda, Q) sqrt(J_2(P, Q, lambda))`
/// for an arbitrary full-support pmf `P`; `Ok(None)` when `P` has interior
/// or boundary zeros (the recursion information does not characterize the
/// law there).
pub fn bound_from_j2(p: &Pmf, q: &Severity, lambda: f64) -> Result<Option<f64>> {
    let j2 = j2_katti_panjer(p, q, Some(lambda))?;
    if !j2.support_full {
        return Ok(None);
    }
    let factors = stein_factors(lambda, q);
    Ok(Some(factors.h * j2.value.sqrt()))
}

/// A bound entry that knows why it might not be a number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundValue {
    /// A finite bound.
    Value(f64),
    /// The bound's formula degenerated to infinity (e.g. a vanished
    /// denominator); still "applicable", just useless.
    Infinite,
    /// The theorem behind the bound does not cover this configuration.
    NotApplicable,
}

impl BoundValue {
    /// Wraps an optional bound: `None` becomes [`BoundValue::NotApplicable`],
    /// an infinite value becomes [`BoundValue::Infinite`].
    pub fn from_option(value: Option<f64>) -> Self {
        match value {
            None => BoundValue::NotApplicable,
            Some(v) if v.is_infinite() => BoundValue::Infinite,
            Some(v) => BoundValue::Value(v),
        }
    }

    /// The finite value, if there is one.
    pub fn value(&self) -> Option<f64> {
        match self {
            BoundValue::Value(v) => Some(*v),
            _ => None,
        }
    }

    /// Whether the bound applies to the configuration (finite or not).
    pub fn is_applicable(&self) -> bool {
        !matches!(self, BoundValue::NotApplicable)
    }
}

impl std::fmt::Display for BoundValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundValue::Value(v) => write!(f, "{v}"),
            BoundValue::Infinite => write!(f, "inf"),
            BoundValue::NotApplicable => write!(f, "NA"),
        }
    }
}

impl serde::Serialize for BoundValue {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BoundValue::Value(v) => serializer.serialize_f64(*v),
            BoundValue::Infinite => serializer.serialize_str("inf"),
            BoundValue::NotApplicable => serializer.serialize_str("NA"),
        }
    }
}

/// Flag: entropy-route bound (`thm1`) skipped because severities differ.
pub const FLAG_THM1_NA: &str = "thm1_na";
/// Flag: Barbour–Hall skipped because severities differ.
pub const FLAG_BARBOUR_HALL_NA: &str = "barbour_hall_na";
/// Flag: Roos's equal-severity bound skipped (severities differ or
/// `theta >= 1`).
pub const FLAG_ROOS_EQUAL_NA: &str = "roos_equal_na";
/// Flag: Roos's general bound skipped (`{j Q(j)}` not non-increasing).
pub const FLAG_ROOS_GENERAL_NA: &str = "roos_general_na";
/// Flag: Roos's general bound degenerated to infinity.
pub const FLAG_ROOS_GENERAL_INF: &str = "roos_general_inf";
/// Flag: recursion-information bound (`thm3`) skipped because a severity lacks full support.
pub const FLAG_THM3_NA: &str = "thm3_na";
/// Flag: the Barbour–Chryssaphinou bound skipped (`{j Q(j)}` not
/// non-increasing).
pub const FLAG_BCL_STEIN_NA: &str = "bcl_stein_na";
/// Flag: the Stein factor exceeded [`H_VACUOUS_THRESHOLD`].
pub const FLAG_H_VACUOUS: &str = "h_vacuous";

/// Every bound next to the exactly computed distances, for one sum
/// specification.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BoundReport {
    /// Total rate `sum_i p_i`.
    pub lambda: f64,
    /// Mixture severity mean.
    pub q: f64,
    /// Entropy-route bound, on the relative entropy scale.
    pub thm1_kl: BoundValue,
    /// Entropy-route bound transferred to total variation via Pinsker.
    pub thm1_tv: BoundValue,
    /// Size-biasing total variation bound.
    pub thm2_tv: BoundValue,
    /// Recursion-information total variation bound.
    pub thm3_tv: BoundValue,
    /// Le Cam's bound.
    pub lecam: BoundValue,
    /// Barbour–Hall bound.
    pub barbour_hall: BoundValue,
    /// Roos's equal-severity bound.
    pub roos_equal: BoundValue,
    /// Roos's general-severity bound (simplified form).
    pub roos_general: BoundValue,
    /// Barbour–Chryssaphinou Stein-method bound.
    pub bcl_stein: BoundValue,
    /// Exact total variation distance to the matched compound Poisson law.
    pub exact_tv: DistanceResult,
    /// Exact relative entropy against the matched compound Poisson law.
    pub exact_kl: DistanceResult,
    /// Applicability notes, drawn from the fixed `FLAG_*` vocabulary, in
    /// declaration order.
    pub flags: Vec<String>,
}

/// Computes the distribution of the sum, the matched compound Poisson
/// reference, the exact distances, and every bound with its applicability
/// flags.
///
/// The compound Poisson reference is extended to cover the sum's stored
/// support, so the relative entropy never reports a spurious infinity from
/// a truncated reference.
pub fn full_report(spec: &SumSpec) -> Result<BoundReport> {
    let p = sum_distribution(spec);
    let reference = compound_poisson_min_len(
        spec.lambda(),
        spec.mixture_q(),
        spec.policy(),
        p.len(),
    )?;
    let exact_tv = total_variation(&p, &reference);
    let exact_kl = relative_entropy(&p, &reference);

    let mut flags = Vec::new();
    let thm1 = bound_thm1(spec);
    if thm1.is_none() {
        flags.push(FLAG_THM1_NA.to_string());
    }
    let bh = bound_barbour_hall(spec);
    if bh.is_none() {
        flags.push(FLAG_BARBOUR_HALL_NA.to_string());
    }
    let roos_eq = bound_roos_equal(spec);
    if roos_eq.is_none() {
        flags.push(FLAG_ROOS_EQUAL_NA.to_string());
    }
    let roos_gen = bound_roos_general(spec);
    match roos_gen {
        None => flags.push(FLAG_ROOS_GENERAL_NA.to_string()),
        Some(v) if v.is_infinite() => flags.push(FLAG_ROOS_GENERAL_INF.to_string()),
        _ => {}
    }
    let thm3 = bound_thm3(spec);
    if thm3.is_none() {
        flags.push(FLAG_THM3_NA.to_string());
    }
    let bcl = bound_bcl_stein(spec);
    if bcl.is_none() {
        flags.push(FLAG_BCL_STEIN_NA.to_string());
    }
    if stein_factors(spec.lambda(), spec.mixture_q()).vacuous {
        flags.push(FLAG_H_VACUOUS.to_string());
    }

    Ok(BoundReport {
        lambda: spec.lambda(),
        q: spec.q(),
        thm1_kl: BoundValue::from_option(thm1),
        thm1_tv: BoundValue::from_option(bound_thm1_tv(spec)),
        thm2_tv: BoundValue::Value(bound_thm2(spec, false)),
        thm3_tv: BoundValue::from_option(thm3),
        lecam: BoundValue::Value(bound_lecam(spec)),
        barbour_hall: BoundValue::from_option(bh),
        roos_equal: BoundValue::from_option(roos_eq),
        roos_general: BoundValue::from_option(roos_gen),
        bcl_stein: BoundValue::from_option(bcl),
        exact_tv,
        exact_kl,
        flags,
    })
}
