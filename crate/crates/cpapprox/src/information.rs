//! Score functions and information functionals.
//!
//! Three discrete scores drive the sharpest approximation bounds in this
//! crate, each vanishing exactly on the law it characterises:
//!
//! * the *scaled score* `rho(y) = (y+1) P(y+1) / (lambda P(y)) - 1`, zero
//!   iff `P` is Poisson(lambda); its information `J_pi = lambda E[rho^2]`
//!   is the scaled Fisher information;
//! * the *size-biased score* `r1`, built from leave-one-out distributions
//!   of a compound Bernoulli sum; its information `J_1 = lambda E[r1^2]`
//!   enters the relative-entropy bounds;
//! * the *recursion score* `r2(y) = lambda sum_j j Q(j) P(y-j) / P(y) - y`,
//!   zero iff `P` satisfies the Katti–Panjer recursion, i.e. iff `P` is
//!   compound Poisson with rate `lambda` and severity `Q`; its information
//!   is `J_2 = E[r2^2]`.
//!
//! Both `r1` and `r2` satisfy exact projection identities: the score of the
//! sum is the conditional expectation of a weighted sum of summand scores
//! given the sum. [`projection_residual_r1`] and [`projection_residual_r2`]
//! verify those identities by brute-force enumeration, and the
//! subadditivity of `J_1` and `J_2` over independent summands follows from
//! them.

use crate::compound::{leave_one_out_all, sum_distribution, SumSpec};
use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::pmf::{Pmf, Severity};

/// Expectations defining the information functionals are restricted to
/// `{y : P(y) > SUPPORT_FLOOR}`: entries at or below the floor are
/// truncation debris whose score ratios carry no information.
pub const SUPPORT_FLOOR: f64 = 1e-12;

/// Projection residuals enumerate conditional expectations exactly; these
/// caps keep that enumeration at desk scale.
pub const MAX_PROJECTION_SUMMANDS: usize = 8;
/// Largest per-summand severity support accepted by the projection checks.
pub const MAX_PROJECTION_SUPPORT: usize = 200;

/// Which score a [`ScoreVector`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoreKind {
    /// The scaled score `rho`, vanishing on Poisson laws.
    Scaled,
    /// The size-biased score `r1` of a compound Bernoulli sum.
    SizeBiased,
    /// The recursion score `r2`, vanishing on compound Poisson laws.
    KattiPanjer,
}

/// A score evaluated on the stored support of its base pmf.
#[derive(Clone, Debug)]
pub struct ScoreVector {
    kind: ScoreKind,
    base: Pmf,
    values: Vec<f64>,
    included: Vec<bool>,
}

impl ScoreVector {
    /// Which score this is.
    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    /// The pmf the score was evaluated on.
    pub fn base(&self) -> &Pmf {
        &self.base
    }

    /// Score values aligned with `base().probs()`; meaningful only where
    /// [`ScoreVector::included`] is true.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Whether index `y` participates in expectations.
    pub fn included(&self, y: usize) -> bool {
        self.included.get(y).copied().unwrap_or(false)
    }

    /// The score at `y`, if included.
    pub fn value(&self, y: usize) -> Option<f64> {
        if self.included(y) {
            Some(self.values[y])
        } else {
            None
        }
    }

    /// `sum_y P(y) v(y)` over included points — zero (up to truncation) for
    /// all three scores.
    pub fn weighted_mean(&self) -> f64 {
        let mut acc = KahanSum::new();
        for (y, &v) in self.values.iter().enumerate() {
            if self.included[y] {
                acc.add(self.base.prob(y) * v);
            }
        }
        acc.value()
    }

    /// `sum_y P(y) v(y)^2` over included points.
    pub fn weighted_second_moment(&self) -> f64 {
        let mut acc = KahanSum::new();
        for (y, &v) in self.values.iter().enumerate() {
            if self.included[y] {
                acc.add(self.base.prob(y) * v * v);
            }
        }
        acc.value()
    }
}

/// An information value together with a support diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct InfoResult {
    /// The (non-negative) information value.
    pub value: f64,
    /// Whether the base pmf was strictly positive on its whole stored
    /// range. `J_2` characterises its law only under full support, so a
    /// `false` here warns that the value ignores structural zeros.
    pub support_full: bool,
}

fn full_support(p: &Pmf) -> bool {
    p.probs().iter().all(|&v| v > 0.0)
}

/// The scaled score `rho(y) = (y+1) P(y+1) / (lambda P(y)) - 1` with
/// `lambda = mean(P)`, evaluated where `P(y) > 0`.
pub fn scaled_score(p: &Pmf) -> Result<ScoreVector> {
    let lambda = p.mean();
    if lambda <= 0.0 {
        return Err(Error::ZeroMean);
    }
    let mut values = vec![0.0; p.len()];
    let mut included = vec![false; p.len()];
    for y in 0..p.len() {
        let py = p.prob(y);
        if py > 0.0 {
            values[y] = (y + 1) as f64 * p.prob(y + 1) / (lambda * py) - 1.0;
            included[y] = true;
        }
    }
    Ok(ScoreVector {
        kind: ScoreKind::Scaled,
        base: p.clone(),
        values,
        included,
    })
}

/// The scaled Fisher information `J_pi = lambda E[rho^2]`, zero exactly on
/// Poisson laws.
pub fn scaled_fisher(p: &Pmf) -> Result<InfoResult> {
    let score = scaled_score(p)?;
    Ok(InfoResult {
        value: p.mean() * score.weighted_second_moment(),
        support_full: full_support(p),
    })
}

/// The size-biased score of a compound Bernoulli sum,
///
/// ```text
/// r1(s) = sum_i p_i F_i(s) / (lambda P(s)) - 1,
/// ```
///
/// where `F_i` is the sum with summand `i` left out. Size-biasing a
/// Bernoulli count collapses it to zero, which is why the leave-one-out
/// laws appear. Evaluated where `P(s) > 0`; the ratio `F_i(s) / P(s)` is
/// bounded by `1 / (1 - p_i)`, so the score is numerically tame everywhere.
pub fn score_r1(spec: &SumSpec) -> ScoreVector {
    let p = sum_distribution(spec);
    let lambda = spec.lambda();
    let loos = leave_one_out_all(spec);
    let mut values = vec![0.0; p.len()];
    let mut included = vec![false; p.len()];
    for s in 0..p.len() {
        let ps = p.prob(s);
        if ps <= 0.0 {
            continue;
        }
        let mut num = KahanSum::new();
        for (summand, loo) in spec.summands().iter().zip(&loos) {
            num.add(summand.p() * loo.prob(s));
        }
        values[s] = num.value() / (lambda * ps) - 1.0;
        included[s] = true;
    }
    ScoreVector {
        kind: ScoreKind::SizeBiased,
        base: p,
        values,
        included,
    }
}

/// The size-biased information `J_1 = lambda E[r1^2]`.
///
/// For a single compound Bernoulli summand this collapses to the closed
/// form `p^2 / (1 - p)`, independent of the severity; over independent
/// summands it is subadditive with weights `p_i / lambda`, giving
/// `lambda J_1(S) <= sum_i p_i^3 / (1 - p_i)`.
pub fn j1_size_biased(spec: &SumSpec) -> InfoResult {
    let score = score_r1(spec);
    InfoResult {
        value: spec.lambda() * score.weighted_second_moment(),
        support_full: full_support(score.base()),
    }
}

fn resolve_lambda(p: &Pmf, q: &Severity, lambda: Option<f64>) -> Result<f64> {
    let lambda = match lambda {
        Some(l) => l,
        None => {
            let m = p.mean();
            if m <= 0.0 {
                return Err(Error::ZeroMean);
            }
            m / q.mean()
        }
    };
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter {
            what: "lambda",
            value: lambda,
            expected: "> 0 and finite",
        });
    }
    Ok(lambda)
}

/// The recursion score
///
/// ```text
/// r2(y) = lambda * sum_{j=1..min(y, N_Q)} j Q(j) P(y-j) / P(y) - y,
/// ```
///
/// computed wherever `P(y) > 0` (and the ratios stay finite); expectations
/// such as `J_2` are restricted to the entries above [`SUPPORT_FLOOR`] via
/// the inclusion mask. The score vanishes identically iff `P` satisfies the
/// Katti–Panjer recursion for `(lambda, Q)`. When `lambda` is `None` it
/// defaults to the moment match `mean(P) / mean(Q)`.
pub fn score_r2(p: &Pmf, q: &Severity, lambda: Option<f64>) -> Result<ScoreVector> {
    let lambda = resolve_lambda(p, q, lambda)?;
    let jq: Vec<f64> = q
        .pmf()
        .probs()
        .iter()
        .enumerate()
        .map(|(j, &qj)| j as f64 * qj)
        .collect();
    let mut values = vec![0.0; p.len()];
    let mut included = vec![false; p.len()];
    for y in 0..p.len() {
        let py = p.prob(y);
        if py <= 0.0 {
            continue;
        }
        let mut s = KahanSum::new();
        let j_max = y.min(jq.len() - 1);
        for j in 1..=j_max {
            s.add(jq[j] * p.prob(y - j));
        }
        let v = lambda * s.value() / py - y as f64;
        if v.is_finite() {
            values[y] = v;
            included[y] = py > SUPPORT_FLOOR;
        }
    }
    Ok(ScoreVector {
        kind: ScoreKind::KattiPanjer,
        base: p.clone(),
        values,
        included,
    })
}

/// The recursion information `J_2 = E[r2^2]`, zero exactly on
/// `CPo(lambda, Q)`; it characterises the law only when the base pmf has
/// full support (see [`InfoResult::support_full`]). Subadditive over
/// independent summands: `J_2(S) <= sum_i J_2(Y_i)` with per-summand rates
/// `lambda_i = p_i`.
pub fn j2_katti_panjer(p: &Pmf, q: &Severity, lambda: Option<f64>) -> Result<InfoResult> {
    let score = score_r2(p, q, lambda)?;
    Ok(InfoResult {
        value: score.weighted_second_moment(),
        support_full: full_support(p),
    })
}

/// The Johnstone–MacGibbon discrete Fisher information
/// `I(Y) = E[(P(Y-1)/P(Y) - 1)^2]` with `P(-1) = 0`, restricted like the
/// other functionals to entries above [`SUPPORT_FLOOR`].
///
/// For the unit severity it ties `J_2` to classical Fisher information:
/// `J_2 = lambda^2 I(Y) + var(Y) - 2 lambda` on full-support laws.
pub fn johnstone_macgibbon(p: &Pmf) -> InfoResult {
    let mut acc = KahanSum::new();
    for y in 0..p.len() {
        let py = p.prob(y);
        if py <= SUPPORT_FLOOR {
            continue;
        }
        let prev = if y == 0 { 0.0 } else { p.prob(y - 1) };
        let d = prev / py - 1.0;
        acc.add(py * d * d);
    }
    InfoResult {
        value: acc.value(),
        support_full: full_support(p),
    }
}

fn guard_projection_scale(spec: &SumSpec) -> Result<()> {
    if spec.n() > MAX_PROJECTION_SUMMANDS {
        return Err(Error::DeskScale {
            what: "projection summands",
            got: spec.n(),
            max: MAX_PROJECTION_SUMMANDS,
        });
    }
    for s in spec.summands() {
        let support = s.severity().pmf().max_stored();
        if support > MAX_PROJECTION_SUPPORT {
            return Err(Error::DeskScale {
                what: "projection severity support",
                got: support,
                max: MAX_PROJECTION_SUPPORT,
            });
        }
    }
    Ok(())
}

/// `E[g(Y_i) | S = s] = sum_x P_i(x) F_i(s - x) g(x) / P(s)` for one `s`,
/// by exact enumeration over the summand's whole positive support. The
/// inclusion mask of `g` is deliberately ignored here: the projection
/// identity needs every positive-mass point, including sub-floor tail
/// cells whose weight is tiny but whose score is large.
fn conditional_expectation(
    summand_pmf: &Pmf,
    loo: &Pmf,
    g: &ScoreVector,
    s: usize,
    p_s: f64,
) -> f64 {
    let mut acc = KahanSum::new();
    let values = g.values();
    for x in 0..summand_pmf.len().min(s + 1).min(values.len()) {
        let px = summand_pmf.prob(x);
        if px <= 0.0 || !values[x].is_finite() {
            continue;
        }
        acc.add(px * loo.prob(s - x) * values[x]);
    }
    acc.value() / p_s
}

/// Largest deviation, over the bulk support, between the size-biased score
/// of the sum and the projected summand scores
/// `sum_i (p_i / lambda) E[r1_i(Y_i) | S = s]`.
///
/// The identity is exact in infinite precision; the returned residual
/// measures truncation plus rounding and should sit near machine scale
/// (at most 1e-8) for desk-sized specs.
pub fn projection_residual_r1(spec: &SumSpec) -> Result<f64> {
    guard_projection_scale(spec)?;
    let p = sum_distribution(spec);
    let lambda = spec.lambda();
    let loos = leave_one_out_all(spec);
    let sum_score = score_r1(spec);
    // Per-summand scores via the general machinery on one-summand specs.
    let mut summand_scores = Vec::with_capacity(spec.n());
    let mut summand_pmfs = Vec::with_capacity(spec.n());
    for s in spec.summands() {
        let single = SumSpec::new(vec![s.clone()], *spec.policy())?;
        summand_scores.push(score_r1(&single));
        summand_pmfs.push(s.pmf());
    }
    let mut worst = 0.0f64;
    for s in 0..p.len() {
        let ps = p.prob(s);
        if ps <= SUPPORT_FLOOR {
            continue;
        }
        let mut projected = KahanSum::new();
        for i in 0..spec.n() {
            let e = conditional_expectation(&summand_pmfs[i], &loos[i], &summand_scores[i], s, ps);
            projected.add(spec.summands()[i].p() / lambda * e);
        }
        let lhs = sum_score.values()[s];
        worst = worst.max((lhs - projected.value()).abs());
    }
    Ok(worst)
}

/// Bulk-support floor for the `r2` projection check: conditional
/// expectations divide by `P(s)`, so the comparison is restricted to
/// `P(s) > 1e-10` where both sides are numerically meaningful.
pub const R2_BULK_FLOOR: f64 = 1e-10;

/// Largest deviation, over the bulk support, between the recursion score of
/// the sum (with the mixture severity and `lambda = sum p_i`) and the
/// projected summand scores `sum_i E[r2_i(Y_i) | S = s]` with per-summand
/// rates `lambda_i = p_i`.
///
/// Requires every summand pmf to be positive on its truncated range.
///
/// For truncated severities the identity holds verbatim only at `s` values
/// not exceeding any summand's stored support edge: beyond that, the
/// recursion score of the sum draws on severity-tail combinations the
/// conditional expectation cannot see. Build severities several orders
/// deeper than [`R2_BULK_FLOOR`] (e.g. truncation epsilon `1e-18`) so the
/// bulk window sits strictly inside every summand's support; the residual
/// then measures pure rounding. The support guard keeps even deep
/// truncations cheap.
pub fn projection_residual_r2(spec: &SumSpec) -> Result<f64> {
    guard_projection_scale(spec)?;
    let summand_pmfs: Vec<Pmf> = spec.summands().iter().map(|s| s.pmf()).collect();
    for pmf in &summand_pmfs {
        if !full_support(pmf) {
            return Err(Error::SupportDeficient {
                what: "r2 projection",
            });
        }
    }
    let p = sum_distribution(spec);
    let lambda = spec.lambda();
    let loos = leave_one_out_all(spec);
    let sum_score = score_r2(&p, spec.mixture_q(), Some(lambda))?;
    let mut summand_scores = Vec::with_capacity(spec.n());
    for s in spec.summands() {
        let score = score_r2(&s.pmf(), s.severity(), Some(s.p()))?;
        summand_scores.push(score);
    }
    let mut worst = 0.0f64;
    for s in 0..p.len() {
        let ps = p.prob(s);
        if ps <= R2_BULK_FLOOR {
            continue;
        }
        let mut projected = KahanSum::new();
        for i in 0..spec.n() {
            let e = conditional_expectation(&summand_pmfs[i], &loos[i], &summand_scores[i], s, ps);
            projected.add(e);
        }
        let lhs = sum_score.values()[s];
        worst = worst.max((lhs - projected.value()).abs());
    }
    Ok(worst)
}
