//! Randomized invariants: conservation and symmetry of the pmf algebra,
//! metric axioms for total variation, Pinsker's inequality, mean-zero
//! score identities, Stein-factor ranges, and the power-law quality of
//! the asymptotic regime fits.

use proptest::collection::vec;
use proptest::prelude::*;

use cpapprox::bounds::{bound_thm1, full_report, stein_factors};
use cpapprox::compound::{sum_distribution, SumSpec, SummandSpec};
use cpapprox::divergence::{relative_entropy, total_variation};
use cpapprox::experiment::{run_regimes, Regime};
use cpapprox::information::{j2_katti_panjer, scaled_score, score_r1, score_r2};
use cpapprox::pmf::{Pmf, Severity, TruncationPolicy};

fn policy() -> TruncationPolicy {
    TruncationPolicy::default()
}

/// A strictly positive pmf on `0..len` with no tail: every cell is far
/// above the support floor, so score vectors include the whole support.
/// At least two cells, so the mean is positive and size-biasing is
/// well defined.
fn arb_positive_pmf() -> impl Strategy<Value = Pmf> {
    vec(0.05f64..1.0, 2..24).prop_map(|weights| {
        let total: f64 = weights.iter().sum();
        Pmf::new(weights.into_iter().map(|w| w / total).collect(), 0.0).unwrap()
    })
}

/// A pmf that may carry tail mass, as produced by truncated pipelines.
fn arb_tailed_pmf() -> impl Strategy<Value = Pmf> {
    (vec(0.0f64..1.0, 1..24), 0.0f64..0.05).prop_map(|(weights, tail)| {
        let total: f64 = weights.iter().sum::<f64>() + 1e-3 + tail;
        let probs: Vec<f64> = weights
            .iter()
            .map(|w| (w + 1e-3 / (weights.len() as f64)) / total)
            .collect();
        Pmf::new(probs, tail / total).unwrap()
    })
}

fn arb_spec() -> impl Strategy<Value = SumSpec> {
    vec((0.05f64..0.6, 0.1f64..0.5), 1..5).prop_map(|pairs| {
        let summands = pairs
            .into_iter()
            .map(|(p, alpha)| {
                SummandSpec::new(p, Severity::geometric(alpha, &policy()).unwrap()).unwrap()
            })
            .collect();
        SumSpec::new(summands, policy()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convolution_conserves_total_mass(a in arb_tailed_pmf(), b in arb_tailed_pmf()) {
        let c = a.convolve(&b);
        let expected = a.total_mass() * b.total_mass();
        prop_assert!((c.total_mass() - expected).abs() <= 1e-12);
    }

    #[test]
    fn convolution_commutes(a in arb_tailed_pmf(), b in arb_tailed_pmf()) {
        let ab = a.convolve(&b);
        let ba = b.convolve(&a);
        prop_assert!(ab.sup_distance(&ba) <= 1e-15);
        prop_assert!((ab.tail_mass() - ba.tail_mass()).abs() <= 1e-15);
    }

    #[test]
    fn total_variation_is_a_metric(
        a in arb_tailed_pmf(),
        b in arb_tailed_pmf(),
        c in arb_tailed_pmf(),
    ) {
        let ab = total_variation(&a, &b);
        let ba = total_variation(&b, &a);
        prop_assert_eq!(ab.value.to_bits(), ba.value.to_bits());
        prop_assert!(ab.value >= 0.0 && ab.value <= 1.0 + 1e-12);
        prop_assert!(total_variation(&a, &a).value <= 1e-15);

        let ac = total_variation(&a, &c);
        let bc = total_variation(&b, &c);
        prop_assert!(ac.value <= ab.value + bc.value + ab.error_budget + bc.error_budget + 1e-12);
    }

    #[test]
    fn pinsker_holds_on_matched_supports(weights in vec((0.05f64..1.0, 0.05f64..1.0), 2..20)) {
        let total_p: f64 = weights.iter().map(|(p, _)| p).sum();
        let total_q: f64 = weights.iter().map(|(_, q)| q).sum();
        let p = Pmf::new(weights.iter().map(|(w, _)| w / total_p).collect(), 0.0).unwrap();
        let q = Pmf::new(weights.iter().map(|(_, w)| w / total_q).collect(), 0.0).unwrap();
        let tv = total_variation(&p, &q);
        let kl = relative_entropy(&p, &q);
        prop_assert!(2.0 * tv.value * tv.value <= kl.value + 1e-12);
    }

    #[test]
    fn scaled_score_is_mean_zero(p in arb_positive_pmf()) {
        let s = scaled_score(&p).unwrap();
        prop_assert!(s.weighted_mean().abs() <= 1e-8);
    }

    #[test]
    fn r1_score_is_mean_zero(spec in arb_spec()) {
        let s = score_r1(&spec);
        prop_assert!(s.weighted_mean().abs() <= 1e-8);
    }

    #[test]
    fn r2_score_is_mean_zero_on_included_support(spec in arb_spec()) {
        let s = sum_distribution(&spec);
        let sv = score_r2(&s, spec.mixture_q(), Some(spec.lambda())).unwrap();
        let all_included = (0..s.len()).all(|y| sv.included(y));
        if all_included {
            prop_assert!(sv.weighted_mean().abs() <= 1e-6);
        } else {
            // Excluded cells carry at most the support floor each; the
            // identity still holds at the scale of the excluded mass.
            prop_assert!(sv.weighted_mean().abs() <= 1e-3);
        }
    }

    #[test]
    fn j2_is_nonnegative(spec in arb_spec()) {
        let s = sum_distribution(&spec);
        let j2 = j2_katti_panjer(&s, spec.mixture_q(), Some(spec.lambda())).unwrap();
        prop_assert!(j2.value >= 0.0);
    }

    #[test]
    fn stein_factors_stay_in_range(lambda in 0.1f64..10.0, alpha in 0.01f64..0.95) {
        let q = Severity::geometric(alpha, &policy()).unwrap();
        let f = stein_factors(lambda, &q);
        prop_assert_eq!(f.monotone_jq, alpha <= 0.5);
        prop_assert!(f.delta > 0.0);
        prop_assert!(f.h0 > 0.0 && f.h0 <= 1.0);
        if f.monotone_jq {
            prop_assert_eq!(f.h.to_bits(), f.h0.to_bits());
            let g = f.g.unwrap();
            prop_assert!(g > 0.0 && g <= 1.0);
        } else {
            prop_assert!(f.g.is_none());
            prop_assert!(f.h >= f.h0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kl_bound_dominates_exact_divergence(
        n in 1usize..30,
        p in 0.02f64..0.4,
        alpha in 0.1f64..0.45,
    ) {
        let q = Severity::geometric(alpha, &policy()).unwrap();
        let spec = SumSpec::homogeneous(n, p, &q, policy()).unwrap();
        let bound = bound_thm1(&spec).unwrap();
        let report = full_report(&spec).unwrap();
        prop_assert!(bound >= report.exact_kl.value - report.exact_kl.error_budget - 1e-12);
    }
}

/// On a deep geometric grid every pure power-law bound series must fit a
/// log-log line almost perfectly. Exempt by design: series that are
/// constant in one regime (their log-log line is flat and the fit is
/// exact anyway, but tiny curvature from the Stein factor makes the
/// correlation ratio meaningless) and the one series carrying a slowly
/// varying logarithmic factor.
#[test]
fn asymptotic_fits_are_power_laws() {
    let grid: Vec<usize> = vec![312, 625, 1250, 2500, 5000];
    let fits_i = run_regimes(Regime::I, 5.0, &grid).unwrap();
    let fits_ii = run_regimes(Regime::II, 0.5, &grid).unwrap();
    let pure_i = ["thm3_tv", "lecam", "roos_general", "bcl_stein"];
    let pure_ii = ["thm2_tv", "thm3_tv", "roos_general"];
    for f in &fits_i {
        if pure_i.contains(&f.bound_name.as_str()) {
            assert!(
                f.r_squared >= 0.98,
                "regime I {} fits with r^2 = {}",
                f.bound_name,
                f.r_squared
            );
        }
    }
    for f in &fits_ii {
        if pure_ii.contains(&f.bound_name.as_str()) {
            assert!(
                f.r_squared >= 0.98,
                "regime II {} fits with r^2 = {}",
                f.bound_name,
                f.r_squared
            );
        }
    }
}
