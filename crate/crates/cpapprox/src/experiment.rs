//! Experiment driver: bound-comparison sweeps, regime slope fits,
//! closed-form ordering checks, a self-test battery, and JSON ingestion of
//! sum specifications.
//!
//! Each sweep evaluates a grid of compound Bernoulli sums, computes every
//! bound next to the exactly-convolved distances, and renders rows in a
//! fixed CSV schema:
//!
//! ```text
//! <sweep vars>, thm1_kl, thm1_tv, thm2_tv, thm3_tv, lecam, barbour_hall,
//! roos_equal, roos_general, bcl_stein, exact_tv, exact_kl, tv_budget, flags
//! ```
//!
//! Numbers use shortest round-trip formatting, inapplicable bounds render
//! as `NA`, degenerate ones as `inf`, and the `flags` cell carries the
//! `;`-joined applicability notes (or `ok`). Grid points are evaluated
//! independently and rows are emitted in grid order, so repeated runs with
//! the same configuration are byte-identical.

use crate::bounds::{
    bound_bcl_stein, bound_lecam, bound_roos_general, bound_thm2, bound_thm3, full_report,
    roos_equal_from_theta, thm1_tv_equal_p, BoundReport, BoundValue,
};
use crate::compound::{compound_poisson, SumSpec, SummandSpec};
use crate::error::{Error, Result};
use crate::information::{j1_size_biased, j2_katti_panjer};
use crate::pmf::{Pmf, Severity, TruncationPolicy};
use crate::reference::poisson_mixture_cpo;

/// The fixed tail of the CSV schema, after the per-figure sweep columns.
pub const BOUND_COLUMNS: [&str; 13] = [
    "thm1_kl",
    "thm1_tv",
    "thm2_tv",
    "thm3_tv",
    "lecam",
    "barbour_hall",
    "roos_equal",
    "roos_general",
    "bcl_stein",
    "exact_tv",
    "exact_kl",
    "tv_budget",
    "flags",
];

/// The named bound-comparison sweeps.
///
/// `F2b` is the same configuration as `F2a` presented on a different axis;
/// both names emit the identical dataset, so either plot can be produced
/// from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FigureName {
    /// Identical severities, `n = 100`, `lambda = 5`, sweeping the
    /// geometric parameter `alpha`.
    F2a,
    /// Alias of [`FigureName::F2a`] (different axis presentation).
    F2b,
    /// Identical severities, `alpha = 0.2`, `n = 100`, sweeping `lambda`.
    F2c,
    /// Spread severities (`alpha_i` equispaced in `[0.15, 0.25]`),
    /// `p = 5/n`, sweeping `n`.
    F3a,
    /// Spread severities, `p = sqrt(0.5/n)`, sweeping `n`.
    F3b,
}

impl FigureName {
    /// The CLI-facing name: `2a`, `2b`, `2c`, `3a`, or `3b`.
    pub fn as_str(&self) -> &'static str {
        match self {
            FigureName::F2a => "2a",
            FigureName::F2b => "2b",
            FigureName::F2c => "2c",
            FigureName::F3a => "3a",
            FigureName::F3b => "3b",
        }
    }
}

impl std::fmt::Display for FigureName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FigureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2a" => Ok(FigureName::F2a),
            "2b" => Ok(FigureName::F2b),
            "2c" => Ok(FigureName::F2c),
            "3a" => Ok(FigureName::F3a),
            "3b" => Ok(FigureName::F3b),
            other => Err(Error::Experiment(format!(
                "unknown figure name `{other}` (expected one of 2a, 2b, 2c, 3a, 3b)"
            ))),
        }
    }
}

impl serde::Serialize for FigureName {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

/// Asymptotic scheme for the slope comparisons: `I` keeps `lambda` fixed
/// with `p = lambda/n`; `II` lets `lambda` grow with `p = sqrt(mu/n)`;
/// `Fixed` marks a non-asymptotic grid (figures).
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Regime {
    I,
    II,
    Fixed,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::I => "I",
            Regime::II => "II",
            Regime::Fixed => "fixed",
        })
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" | "1" => Ok(Regime::I),
            "II" | "ii" | "2" => Ok(Regime::II),
            "fixed" => Ok(Regime::Fixed),
            other => Err(Error::Experiment(format!(
                "unknown regime `{other}` (expected I, II, or fixed)"
            ))),
        }
    }
}

/// One parametric grid point, convertible to a full [`SumSpec`].
#[derive(Clone, Debug, PartialEq)]
pub enum GridPoint {
    /// `n` summands sharing `p = lambda/n` and one geometric severity.
    EqualSeverity { n: usize, lambda: f64, alpha: f64 },
    /// `n` summands sharing `p`, with geometric parameters equispaced in
    /// `[alpha_lo, alpha_hi]`.
    SpreadSeverities {
        n: usize,
        p: f64,
        alpha_lo: f64,
        alpha_hi: f64,
    },
}

/// Geometric parameters equispaced over `[lo, hi]`; a single summand gets
/// the midpoint.
pub fn equispaced_alphas(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

impl GridPoint {
    /// Builds the concrete sum specification under `policy`.
    pub fn build(&self, policy: &TruncationPolicy) -> Result<SumSpec> {
        match *self {
            GridPoint::EqualSeverity { n, lambda, alpha } => {
                if n == 0 {
                    return Err(Error::EmptySpec);
                }
                let q = Severity::geometric(alpha, policy)?;
                SumSpec::homogeneous(n, lambda / n as f64, &q, policy.clone())
            }
            GridPoint::SpreadSeverities {
                n,
                p,
                alpha_lo,
                alpha_hi,
            } => {
                if n == 0 {
                    return Err(Error::EmptySpec);
                }
                let summands = equispaced_alphas(n, alpha_lo, alpha_hi)
                    .into_iter()
                    .map(|alpha| {
                        SummandSpec::new(p, Severity::geometric(alpha, policy)?)
                    })
                    .collect::<Result<Vec<_>>>()?;
                SumSpec::new(summands, policy.clone())
            }
        }
    }
}

/// A declarative experiment: a name, a grid, the asymptotic scheme, the
/// truncation policy, and an optional output destination.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub name: String,
    pub grid: Vec<GridPoint>,
    pub regime: Regime,
    pub truncation: TruncationPolicy,
    pub output_path: Option<String>,
}

impl ExperimentConfig {
    /// Validates the non-emptiness of the grid.
    pub fn new(
        name: impl Into<String>,
        grid: Vec<GridPoint>,
        regime: Regime,
        truncation: TruncationPolicy,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Experiment("experiment grid is empty".into()));
        }
        Ok(ExperimentConfig {
            name: name.into(),
            grid,
            regime,
            truncation,
            output_path: None,
        })
    }
}

/// Optional deviations from a figure's defaults.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    /// Replacement truncation policy (defaults to
    /// [`TruncationPolicy::default`]).
    pub truncation: Option<TruncationPolicy>,
    /// Replacement grid (defaults to the figure's published grid).
    pub grid: Option<Vec<GridPoint>>,
}

/// One evaluated grid point: the sweep-variable values followed by the
/// full bound report.
#[derive(Clone, Debug, serde::Serialize)]
pub struct FigureRow {
    pub sweep: Vec<f64>,
    pub report: BoundReport,
}

/// An evaluated figure: sweep headers plus one row per grid point, in
/// grid order.
#[derive(Clone, Debug, serde::Serialize)]
pub struct FigureData {
    pub name: FigureName,
    pub sweep_headers: Vec<&'static str>,
    pub rows: Vec<FigureRow>,
}

/// Shortest round-trip decimal rendering (`inf` for infinities).
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn flags_cell(flags: &[String]) -> String {
    if flags.is_empty() {
        "ok".to_string()
    } else {
        flags.join(";")
    }
}

fn report_cells(report: &BoundReport) -> Vec<String> {
    vec![
        report.thm1_kl.to_string(),
        report.thm1_tv.to_string(),
        report.thm2_tv.to_string(),
        report.thm3_tv.to_string(),
        report.lecam.to_string(),
        report.barbour_hall.to_string(),
        report.roos_equal.to_string(),
        report.roos_general.to_string(),
        report.bcl_stein.to_string(),
        fmt_f64(report.exact_tv.value),
        fmt_f64(report.exact_kl.value),
        fmt_f64(report.exact_tv.error_budget),
        flags_cell(&report.flags),
    ]
}

impl FigureData {
    /// Renders the pinned CSV schema: header row, then one line per grid
    /// point, `\n`-terminated.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<&str> = self
            .sweep_headers
            .iter()
            .copied()
            .chain(BOUND_COLUMNS)
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut cells: Vec<String> = row.sweep.iter().map(|v| fmt_f64(*v)).collect();
            cells.extend(report_cells(&row.report));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// The default `n` sweep for the spread-severity figures; the captions do
/// not pin a grid, so this one is a documented default, not a published
/// value.
pub const FIGURE3_N_GRID: [usize; 6] = [25, 50, 100, 200, 400, 800];

/// The default `lambda` sweep for the rate figure; a documented default
/// for the same reason.
pub fn figure2c_lambda_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64).collect()
}

/// The `alpha` sweep shared by the identical-severity figures:
/// `{0.05, 0.10, ..., 0.45}`.
pub fn figure2a_alpha_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 20.0).collect()
}

fn figure_grid(name: FigureName) -> (Vec<&'static str>, Vec<GridPoint>) {
    match name {
        FigureName::F2a | FigureName::F2b => (
            vec!["alpha"],
            figure2a_alpha_grid()
                .into_iter()
                .map(|alpha| GridPoint::EqualSeverity {
                    n: 100,
                    lambda: 5.0,
                    alpha,
                })
                .collect(),
        ),
        FigureName::F2c => (
            vec!["lambda", "p"],
            figure2c_lambda_grid()
                .into_iter()
                .map(|lambda| GridPoint::EqualSeverity {
                    n: 100,
                    lambda,
                    alpha: 0.2,
                })
                .collect(),
        ),
        FigureName::F3a => (
            vec!["n", "p"],
            FIGURE3_N_GRID
                .iter()
                .map(|&n| GridPoint::SpreadSeverities {
                    n,
                    p: 5.0 / n as f64,
                    alpha_lo: 0.15,
                    alpha_hi: 0.25,
                })
                .collect(),
        ),
        FigureName::F3b => (
            vec!["n", "p"],
            FIGURE3_N_GRID
                .iter()
                .map(|&n| GridPoint::SpreadSeverities {
                    n,
                    p: (0.5 / n as f64).sqrt(),
                    alpha_lo: 0.15,
                    alpha_hi: 0.25,
                })
                .collect(),
        ),
    }
}

fn sweep_values(point: &GridPoint, headers: &[&'static str]) -> Vec<f64> {
    match *point {
        GridPoint::EqualSeverity { n, lambda, alpha } => headers
            .iter()
            .map(|h| match *h {
                "alpha" => alpha,
                "lambda" => lambda,
                "p" => lambda / n as f64,
                "n" => n as f64,
                other => unreachable!("unknown sweep header {other}"),
            })
            .collect(),
        GridPoint::SpreadSeverities { n, p, .. } => headers
            .iter()
            .map(|h| match *h {
                "n" => n as f64,
                "p" => p,
                other => unreachable!("unknown sweep header {other}"),
            })
            .collect(),
    }
}

/// Evaluates one named figure: builds its (possibly overridden) grid,
/// computes the full bound report at every point, and returns the rows in
/// grid order.
pub fn run_figure(name: FigureName, overrides: &Overrides) -> Result<FigureData> {
    let (headers, default_grid) = figure_grid(name);
    let grid = overrides.grid.clone().unwrap_or(default_grid);
    let truncation = overrides
        .truncation
        .clone()
        .unwrap_or_default();
    let config = ExperimentConfig::new(
        format!("figure-{name}"),
        grid,
        Regime::Fixed,
        truncation,
    )?;
    let mut rows = Vec::with_capacity(config.grid.len());
    for point in &config.grid {
        let spec = point.build(&config.truncation)?;
        let report = full_report(&spec)?;
        rows.push(FigureRow {
            sweep: sweep_values(point, &headers),
            report,
        });
    }
    Ok(FigureData {
        name,
        sweep_headers: headers,
        rows,
    })
}

/// A fitted power law `bound ~ C n^slope` from least squares on
/// `(log n, log bound)`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SlopeFit {
    pub bound_name: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// The bounds fitted by [`run_regimes`]: the general-severity family (the
/// equal-severity bounds are inapplicable on spread-severity grids).
pub const REGIME_BOUNDS: [&str; 5] = ["thm2_tv", "thm3_tv", "lecam", "roos_general", "bcl_stein"];

/// Fits `log(bound)` against `log(n)` for each general-severity bound over
/// an asymptotic scheme: Regime `I` takes `p = lambda/n` with
/// `lambda = lambda_or_mu` fixed, Regime `II` takes
/// `p = sqrt(lambda_or_mu / n)`. Severities are geometrics equispaced in
/// `[0.15, 0.25]`.
///
/// Only the bounds are evaluated (no exact distances), so grids reaching
/// thousands of summands stay fast. Requires at least 4 geometrically
/// spaced `n` values; a bound series with fewer than 4 positive finite
/// values is a degenerate fit and reported as an error.
pub fn run_regimes(
    regime: Regime,
    lambda_or_mu: f64,
    n_values: &[usize],
) -> Result<Vec<SlopeFit>> {
    if regime == Regime::Fixed {
        return Err(Error::Experiment(
            "slope fits need an asymptotic regime (I or II)".into(),
        ));
    }
    if !(lambda_or_mu.is_finite() && lambda_or_mu > 0.0) {
        return Err(Error::InvalidParameter {
            what: "regime rate parameter",
            value: lambda_or_mu,
            expected: "finite and > 0",
        });
    }
    if n_values.len() < 4 {
        return Err(Error::TooFewPoints {
            got: n_values.len(),
        });
    }
    let mut ratios = Vec::new();
    for w in n_values.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Experiment(
                "n grid must be strictly increasing".into(),
            ));
        }
        ratios.push(w[1] as f64 / w[0] as f64);
    }
    let rmin = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let rmax = ratios.iter().cloned().fold(0.0f64, f64::max);
    if rmax / rmin > 1.3 {
        return Err(Error::Experiment(
            "n grid must be geometrically spaced (consecutive ratios within 30%)".into(),
        ));
    }

    let policy = TruncationPolicy::default();
    let mut series: Vec<Vec<Option<f64>>> = vec![Vec::new(); REGIME_BOUNDS.len()];
    for &n in n_values {
        let p = match regime {
            Regime::I => lambda_or_mu / n as f64,
            Regime::II => (lambda_or_mu / n as f64).sqrt(),
            Regime::Fixed => unreachable!(),
        };
        let point = GridPoint::SpreadSeverities {
            n,
            p,
            alpha_lo: 0.15,
            alpha_hi: 0.25,
        };
        let spec = point.build(&policy)?;
        series[0].push(Some(bound_thm2(&spec, false)));
        series[1].push(bound_thm3(&spec));
        series[2].push(Some(bound_lecam(&spec)));
        series[3].push(bound_roos_general(&spec));
        series[4].push(bound_bcl_stein(&spec));
    }

    let mut fits = Vec::with_capacity(REGIME_BOUNDS.len());
    for (name, values) in REGIME_BOUNDS.iter().zip(&series) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (&n, v) in n_values.iter().zip(values) {
            if let Some(v) = *v {
                if v.is_finite() && v > 0.0 {
                    xs.push((n as f64).ln());
                    ys.push(v.ln());
                }
            }
        }
        if xs.len() < 4 {
            return Err(Error::Experiment(format!(
                "degenerate fit for {name}: only {} usable points",
                xs.len()
            )));
        }
        let (slope, intercept, r_squared) = crate::numeric::linear_fit(&xs, &ys);
        fits.push(SlopeFit {
            bound_name: name.to_string(),
            slope,
            intercept,
            r_squared,
        });
    }
    Ok(fits)
}

/// The default slope-fit grid `{50, 100, ..., 3200}` (doubling).
pub fn regime_n_grid() -> Vec<usize> {
    (0..7).map(|k| 50 << k).collect()
}

/// Renders slope fits as CSV with a leading regime column.
pub fn regimes_to_csv(regime: Regime, fits: &[SlopeFit]) -> String {
    let mut out = String::from("regime,bound,slope,intercept,r_squared\n");
    for f in fits {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            regime,
            f.bound_name,
            fmt_f64(f.slope),
            fmt_f64(f.intercept),
            fmt_f64(f.r_squared)
        ));
    }
    out
}

/// One `(p, n)` cell of the closed-form ordering checks; `None` marks a
/// part whose hypothesis region excludes the cell.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct PropositionRow {
    pub p: f64,
    pub n: usize,
    /// `thm1_tv <= lecam` on `n > 1/(sqrt(2) p (1-p))`.
    pub part1: Option<bool>,
    /// `thm1_tv <= barbour_hall` on `p < 1/2` and
    /// `lambda >= 1/sqrt(2 (1 - p))`. Below that rate the Barbour–Hall
    /// `min` takes its unit branch (`n p^2`) and the comparison is
    /// genuinely reversed, so those cells are exempt: the claim is a
    /// theorem exactly on the stated region (for `lambda >= 1` the bound
    /// is `p` and `p < 1/2` alone suffices; the rate condition is also
    /// implied by the part-1 region).
    pub part2: Option<bool>,
    /// `thm1_tv <= min(lecam, barbour_hall, roos_equal)` on
    /// `0.012 < p < 1/2` and the part-1 region.
    pub part3: Option<bool>,
}

/// All cells plus the conjunction of every asserted part.
#[derive(Clone, Debug, serde::Serialize)]
pub struct PropositionReport {
    pub rows: Vec<PropositionRow>,
    pub pass: bool,
}

impl PropositionReport {
    /// CSV rows `p,n,part1,part2,part3` with `NA` for out-of-region cells.
    pub fn to_csv(&self) -> String {
        fn cell(b: Option<bool>) -> &'static str {
            match b {
                Some(true) => "true",
                Some(false) => "false",
                None => "NA",
            }
        }
        let mut out = String::from("p,n,part1,part2,part3\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_f64(r.p),
                r.n,
                cell(r.part1),
                cell(r.part2),
                cell(r.part3)
            ));
        }
        out
    }
}

/// The default `p` grid for the ordering checks:
/// `{0.02} ∪ {0.05, 0.10, ..., 0.45}`.
pub fn proposition_p_grid() -> Vec<f64> {
    let mut grid = vec![0.02];
    grid.extend((1..=9).map(|k| k as f64 / 20.0));
    grid
}

/// The default `n` grid for the ordering checks, up to 1000.
pub const PROPOSITION_N_GRID: [usize; 10] = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000];

/// Checks the closed-form orderings between the equal-parameter relative
/// entropy bound (in total variation form, `p / sqrt(2 (1 - p))`) and the
/// Le Cam, Barbour–Hall, and Roos bounds, over the grid, inside each
/// part's hypothesis region.
///
/// Everything here is a closed form in `(p, n)`; no distributions are
/// built.
pub fn run_proposition_checks(p_grid: &[f64], n_grid: &[usize]) -> Result<PropositionReport> {
    const SLACK: f64 = 1e-12;
    for &p in p_grid {
        if !(p > 0.0 && p < 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter {
                what: "proposition p grid entry",
                value: p,
                expected: "in (0, 1)",
            });
        }
    }
    if n_grid.iter().any(|&n| n == 0) {
        return Err(Error::InvalidParameter {
            what: "proposition n grid entry",
            value: 0.0,
            expected: ">= 1",
        });
    }
    let mut rows = Vec::with_capacity(p_grid.len() * n_grid.len());
    let mut pass = true;
    for &p in p_grid {
        for &n in n_grid {
            let thm1 = thm1_tv_equal_p(p);
            let lecam = n as f64 * p * p;
            let bh = 1f64.min(1.0 / (n as f64 * p)) * lecam;
            // theta = lambda^{-1} sum p_i^2 = p for equal p.
            let roos = roos_equal_from_theta(p);
            let in_part1 = n as f64 > 1.0 / (std::f64::consts::SQRT_2 * p * (1.0 - p));
            let part1 = in_part1.then(|| thm1 <= lecam + SLACK);
            let in_part2 =
                p < 0.5 && n as f64 * p * (2.0 * (1.0 - p)).sqrt() >= 1.0 - SLACK;
            let part2 = in_part2.then(|| thm1 <= bh + SLACK);
            let part3 = (p > 0.012 && p < 0.5 && in_part1).then(|| {
                let best = lecam.min(bh).min(roos.unwrap_or(f64::INFINITY));
                thm1 <= best + SLACK
            });
            for part in [part1, part2, part3] {
                if part == Some(false) {
                    pass = false;
                }
            }
            rows.push(PropositionRow {
                p,
                n,
                part1,
                part2,
                part3,
            });
        }
    }
    Ok(PropositionReport { rows, pass })
}

/// One self-test check: a name, whether it passed, and a short detail
/// line (the measured quantity).
#[derive(Clone, Debug, serde::Serialize)]
pub struct SelftestCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// The outcome of the built-in invariant battery.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SelftestReport {
    pub checks: Vec<SelftestCheck>,
}

impl SelftestReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn check(name: &str, body: impl FnOnce() -> Result<(bool, String)>) -> SelftestCheck {
    match body() {
        Ok((pass, detail)) => SelftestCheck {
            name: name.to_string(),
            pass,
            detail,
        },
        Err(e) => SelftestCheck {
            name: name.to_string(),
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Runs a fast invariant battery: recursion vs. Poisson-mixture oracle,
/// the size-biased closed form, the characterization zero, mass
/// conservation, bound validity at one sweep point, the Pinsker transfer,
/// and byte-determinism of a reduced sweep.
pub fn run_selftest() -> SelftestReport {
    let policy = TruncationPolicy::default();
    let checks = vec![
        check("panjer_matches_poisson_mixture", || {
            let q = Severity::geometric(0.3, &policy)?;
            let a = compound_poisson(2.0, &q, &policy)?;
            let b = poisson_mixture_cpo(2.0, &q, &policy);
            let d = a.sup_distance(&b);
            Ok((d <= 1e-10, format!("sup distance {d:.3e}")))
        }),
        check("size_biased_closed_form", || {
            let q = Severity::geometric(0.3, &policy)?;
            let spec = SumSpec::homogeneous(1, 0.3, &q, policy.clone())?;
            let j1 = j1_size_biased(&spec).value;
            let expected = 0.09 / 0.7;
            let gap = (j1 - expected).abs();
            Ok((gap <= 1e-10, format!("|J1 - p^2/(1-p)| = {gap:.3e}")))
        }),
        check("recursion_information_characterizes", || {
            let q = Severity::geometric(0.3, &policy)?;
            let p = compound_poisson(2.0, &q, &policy)?;
            let j2 = j2_katti_panjer(&p, &q, Some(2.0))?.value;
            Ok((j2 <= 1e-8, format!("J2 at its own law = {j2:.3e}")))
        }),
        check("mass_conservation", || {
            let q = Severity::geometric(0.2, &policy)?;
            let p = compound_poisson(5.0, &q, &policy)?;
            let gap = (p.total_mass() - 1.0).abs();
            Ok((gap <= 1e-12, format!("|total mass - 1| = {gap:.3e}")))
        }),
        check("bound_validity_spot", || {
            let point = GridPoint::EqualSeverity {
                n: 100,
                lambda: 5.0,
                alpha: 0.2,
            };
            let report = full_report(&point.build(&policy)?)?;
            let floor = report.exact_tv.value - report.exact_tv.error_budget;
            let bounds = [
                report.thm1_tv,
                report.thm2_tv,
                report.thm3_tv,
                report.lecam,
                report.barbour_hall,
                report.roos_equal,
                report.roos_general,
                report.bcl_stein,
            ];
            let ok = bounds
                .iter()
                .filter_map(BoundValue::value)
                .all(|v| v >= floor);
            Ok((ok, format!("exact TV = {:.6}", report.exact_tv.value)))
        }),
        check("pinsker_transfer", || {
            let q = Severity::geometric(0.25, &policy)?;
            let spec = SumSpec::homogeneous(30, 0.1, &q, policy.clone())?;
            let report = full_report(&spec)?;
            let lhs = report.exact_tv.value - report.exact_tv.error_budget;
            let rhs = ((report.exact_kl.value + report.exact_kl.error_budget) / 2.0).sqrt();
            Ok((lhs <= rhs, format!("TV = {lhs:.6}, sqrt(KL/2) = {rhs:.6}")))
        }),
        check("determinism", || {
            let overrides = Overrides {
                truncation: None,
                grid: Some(vec![GridPoint::EqualSeverity {
                    n: 50,
                    lambda: 2.0,
                    alpha: 0.2,
                }]),
            };
            let a = run_figure(FigureName::F2a, &overrides)?.to_csv();
            let b = run_figure(FigureName::F2a, &overrides)?.to_csv();
            Ok((a == b, format!("{} bytes", a.len())))
        }),
    ];
    SelftestReport { checks }
}

// ---------------------------------------------------------------------------
// JSON sum-specification ingestion.

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    summands: Vec<SummandDef>,
    truncation: Option<TruncationDef>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct SummandDef {
    p: f64,
    severity: SeverityDef,
}

#[derive(serde::Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
enum SeverityDef {
    #[serde(rename = "geometric")]
    Geometric { alpha: f64 },
    #[serde(rename = "pmf")]
    Explicit { probs: Vec<f64> },
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct TruncationDef {
    epsilon: f64,
    max_support: usize,
}

/// Parses a JSON sum specification:
///
/// ```json
/// {
///   "summands": [
///     {"p": 0.1, "severity": {"type": "geometric", "alpha": 0.2}},
///     {"p": 0.2, "severity": {"type": "pmf", "probs": [0.5, 0.3, 0.2]}}
///   ],
///   "truncation": {"epsilon": 1e-12, "max_support": 4096}
/// }
/// ```
///
/// Explicit `probs` start at jump size 1 (severities place no mass at 0)
/// and must sum to 1 within the conservation tolerance. `truncation` is
/// optional and defaults to the standard policy. Violations produce
/// errors naming the offending field; syntax errors carry the line and
/// column.
pub fn spec_from_json(text: &str) -> Result<SumSpec> {
    let file: SpecFile = serde_json::from_str(text).map_err(|e| Error::Spec {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    if file.summands.is_empty() {
        return Err(Error::Spec {
            location: "summands".into(),
            message: "at least one summand is required".into(),
        });
    }
    let policy = match file.truncation {
        Some(t) => TruncationPolicy::new(t.epsilon, t.max_support).map_err(|e| Error::Spec {
            location: "truncation".into(),
            message: e.to_string(),
        })?,
        None => TruncationPolicy::default(),
    };
    let mut summands = Vec::with_capacity(file.summands.len());
    for (i, def) in file.summands.into_iter().enumerate() {
        let severity = match def.severity {
            SeverityDef::Geometric { alpha } => {
                Severity::geometric(alpha, &policy).map_err(|e| Error::Spec {
                    location: format!("summands[{i}].severity.alpha"),
                    message: e.to_string(),
                })?
            }
            SeverityDef::Explicit { probs } => {
                for (j, &v) in probs.iter().enumerate() {
                    if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                        return Err(Error::Spec {
                            location: format!("summands[{i}].severity.probs[{j}]"),
                            message: format!("probability must lie in [0, 1]; got {v}"),
                        });
                    }
                }
                let mut full = Vec::with_capacity(probs.len() + 1);
                full.push(0.0);
                full.extend(probs);
                let pmf = Pmf::new(full, 0.0).map_err(|e| Error::Spec {
                    location: format!("summands[{i}].severity.probs"),
                    message: e.to_string(),
                })?;
                Severity::new(pmf).map_err(|e| Error::Spec {
                    location: format!("summands[{i}].severity"),
                    message: e.to_string(),
                })?
            }
        };
        summands.push(SummandSpec::new(def.p, severity).map_err(|e| Error::Spec {
            location: format!("summands[{i}].p"),
            message: e.to_string(),
        })?);
    }
    SumSpec::new(summands, policy).map_err(|e| Error::Spec {
        location: "summands".into(),
        message: e.to_string(),
    })
}

/// Renders a pmf as CSV: `k,probability` rows over the stored support,
/// then a final `tail,<mass>` row so no probability is silently dropped.
pub fn pmf_to_csv(p: &Pmf) -> String {
    let mut out = String::from("k,probability\n");
    for (k, &v) in p.probs().iter().enumerate() {
        out.push_str(&format!("{k},{}\n", fmt_f64(v)));
    }
    out.push_str(&format!("tail,{}\n", fmt_f64(p.tail_mass())));
    out
}

/// Renders a single bound report as one CSV row (with header), using the
/// same schema as the figures prefixed by `lambda` and `q`.
pub fn report_to_csv(report: &BoundReport) -> String {
    let mut out = String::from("lambda,q,");
    out.push_str(&BOUND_COLUMNS.join(","));
    out.push('\n');
    let mut cells = vec![fmt_f64(report.lambda), fmt_f64(report.q)];
    cells.extend(report_cells(report));
    out.push_str(&cells.join(","));
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_names_round_trip() {
        for name in ["2a", "2b", "2c", "3a", "3b"] {
            let parsed: FigureName = name.parse().unwrap();
            assert_eq!(parsed.as_str(), name);
        }
        assert!("4x".parse::<FigureName>().is_err());
    }

    #[test]
    fn alpha_grid_renders_cleanly() {
        let grid = figure2a_alpha_grid();
        assert_eq!(grid.len(), 9);
        assert_eq!(fmt_f64(grid[0]), "0.05");
        assert_eq!(fmt_f64(grid[2]), "0.15");
        assert_eq!(fmt_f64(grid[8]), "0.45");
    }

    #[test]
    fn equispaced_alphas_cover_the_interval() {
        let a = equispaced_alphas(5, 0.15, 0.25);
        assert_eq!(a.len(), 5);
        assert!((a[0] - 0.15).abs() < 1e-15);
        assert!((a[4] - 0.25).abs() < 1e-15);
        assert!((a[2] - 0.20).abs() < 1e-15);
        assert_eq!(equispaced_alphas(1, 0.15, 0.25), vec![0.20]);
    }

    #[test]
    fn figure_csv_has_pinned_schema() {
        let overrides = Overrides {
            truncation: None,
            grid: Some(vec![GridPoint::EqualSeverity {
                n: 20,
                lambda: 1.0,
                alpha: 0.2,
            }]),
        };
        let data = run_figure(FigureName::F2a, &overrides).unwrap();
        let csv = data.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "alpha,thm1_kl,thm1_tv,thm2_tv,thm3_tv,lecam,barbour_hall,roos_equal,\
             roos_general,bcl_stein,exact_tv,exact_kl,tv_budget,flags"
        );
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 14);
        assert!(row.ends_with(",ok"), "row = {row}");
        assert!(lines.next().is_none());
    }

    #[test]
    fn figure_2b_is_the_2a_dataset() {
        let overrides = Overrides {
            truncation: None,
            grid: Some(vec![GridPoint::EqualSeverity {
                n: 30,
                lambda: 2.0,
                alpha: 0.3,
            }]),
        };
        let a = run_figure(FigureName::F2a, &overrides).unwrap();
        let b = run_figure(FigureName::F2b, &overrides).unwrap();
        assert_eq!(a.sweep_headers, b.sweep_headers);
        assert_eq!(a.to_csv().lines().nth(1), b.to_csv().lines().nth(1));
    }

    #[test]
    fn default_grids_match_published_configurations() {
        let (headers, grid) = figure_grid(FigureName::F2a);
        assert_eq!(headers, vec!["alpha"]);
        assert_eq!(grid.len(), 9);
        match grid[3] {
            GridPoint::EqualSeverity { n, lambda, alpha } => {
                assert_eq!(n, 100);
                assert_eq!(lambda, 5.0);
                assert!((alpha - 0.2).abs() < 1e-15);
            }
            _ => panic!("expected equal-severity grid"),
        }
        let (headers3, grid3) = figure_grid(FigureName::F3b);
        assert_eq!(headers3, vec!["n", "p"]);
        match grid3[0] {
            GridPoint::SpreadSeverities { n, p, .. } => {
                assert_eq!(n, 25);
                assert!((p - (0.5 / 25.0f64).sqrt()).abs() < 1e-15);
            }
            _ => panic!("expected spread-severity grid"),
        }
    }

    #[test]
    fn linear_fit_recovers_exact_lines() {
        let x: Vec<f64> = (1..=6).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let (slope, intercept, r2) = crate::numeric::linear_fit(&x, &y);
        assert!((slope + 2.0).abs() < 1e-12);
        assert!((intercept - 3.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);

        let constant = vec![4.0; 6];
        let (s0, _, r0) = crate::numeric::linear_fit(&x, &constant);
        assert!(s0.abs() < 1e-12);
        assert_eq!(r0, 1.0);
    }

    #[test]
    fn regimes_reject_bad_grids() {
        assert!(matches!(
            run_regimes(Regime::I, 5.0, &[50, 100, 200]),
            Err(Error::TooFewPoints { got: 3 })
        ));
        assert!(run_regimes(Regime::I, 5.0, &[50, 100, 150, 200]).is_err());
        assert!(run_regimes(Regime::Fixed, 5.0, &[50, 100, 200, 400]).is_err());
        assert!(run_regimes(Regime::I, -1.0, &[50, 100, 200, 400]).is_err());
    }

    #[test]
    fn regime_one_lecam_slope_is_minus_one() {
        let fits = run_regimes(Regime::I, 5.0, &[50, 100, 200, 400]).unwrap();
        let lecam = fits.iter().find(|f| f.bound_name == "lecam").unwrap();
        // lecam = n p^2 = lambda^2 / n exactly: slope -1, perfect fit.
        assert!((lecam.slope + 1.0).abs() < 1e-10);
        assert!(lecam.r_squared > 1.0 - 1e-10);
    }

    #[test]
    fn regime_fits_cover_the_general_bounds() {
        let fits = run_regimes(Regime::II, 0.5, &[50, 100, 200, 400]).unwrap();
        let names: Vec<&str> = fits.iter().map(|f| f.bound_name.as_str()).collect();
        assert_eq!(names, REGIME_BOUNDS);
        let csv = regimes_to_csv(Regime::II, &fits);
        assert!(csv.starts_with("regime,bound,slope,intercept,r_squared\n"));
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.lines().nth(1).unwrap().starts_with("II,thm2_tv,"));
    }

    #[test]
    fn proposition_spot_values() {
        let report = run_proposition_checks(&[0.2], &[100]).unwrap();
        let row = report.rows[0];
        // n = 100 is deep inside the part-1 region for p = 0.2.
        assert_eq!(row.part1, Some(true));
        assert_eq!(row.part2, Some(true));
        assert_eq!(row.part3, Some(true));
        assert!(report.pass);
    }

    #[test]
    fn proposition_regions_gate_the_parts() {
        // p = 0.005 < 0.012: part 3 never asserted.
        let report = run_proposition_checks(&[0.005], &PROPOSITION_N_GRID).unwrap();
        assert!(report.rows.iter().all(|r| r.part3.is_none()));
        assert!(report.pass);

        // Part 2 is exempt below the rate threshold lambda =
        // 1/sqrt(2 (1-p)) ~ 141.8/n here, asserted (and true) above it.
        let at = |n: usize| report.rows.iter().find(|r| r.n == n).unwrap().part2;
        assert_eq!(at(100), None);
        assert_eq!(at(200), Some(true));

        // Just below the threshold the raw inequality really is reversed:
        // exempting those cells is honesty, not leniency.
        let thm1 = thm1_tv_equal_p(0.005);
        let bh = 1f64.min(1.0 / (100.0 * 0.005)) * 100.0 * 0.005 * 0.005;
        assert!(thm1 > bh);

        // Below the part-1 boundary nothing is asserted for part 1.
        let p = 0.2f64;
        let boundary = (1.0 / (std::f64::consts::SQRT_2 * p * (1.0 - p))).ceil() as usize;
        let below = run_proposition_checks(&[p], &[boundary - 1]).unwrap();
        assert!(below.rows[0].part1.is_none());
        let at = run_proposition_checks(&[p], &[boundary]).unwrap();
        assert_eq!(at.rows[0].part1, Some(true));
    }

    #[test]
    fn proposition_rejects_bad_grids() {
        assert!(run_proposition_checks(&[0.0], &[10]).is_err());
        assert!(run_proposition_checks(&[1.0], &[10]).is_err());
        assert!(run_proposition_checks(&[0.2], &[0]).is_err());
    }

    #[test]
    fn proposition_csv_marks_exempt_cells() {
        let report = run_proposition_checks(&[0.005], &[10]).unwrap();
        let csv = report.to_csv();
        assert!(csv.starts_with("p,n,part1,part2,part3\n"));
        assert!(csv.lines().nth(1).unwrap().ends_with(",NA"));
    }

    #[test]
    fn selftest_battery_passes() {
        let report = run_selftest();
        for c in &report.checks {
            assert!(c.pass, "{}: {}", c.name, c.detail);
        }
        assert!(report.all_pass());
        assert_eq!(report.checks.len(), 7);
    }

    #[test]
    fn spec_json_round_trips() {
        let text = r#"{
            "summands": [
                {"p": 0.1, "severity": {"type": "geometric", "alpha": 0.2}},
                {"p": 0.2, "severity": {"type": "pmf", "probs": [0.5, 0.3, 0.2]}}
            ],
            "truncation": {"epsilon": 1e-12, "max_support": 4096}
        }"#;
        let spec = spec_from_json(text).unwrap();
        assert_eq!(spec.n(), 2);
        assert!((spec.lambda() - 0.3).abs() < 1e-15);
        // Second severity: mass 0.5 at 1, 0.3 at 2, 0.2 at 3.
        assert!((spec.summands()[1].severity().prob(3) - 0.2).abs() < 1e-15);
        assert_eq!(spec.summands()[1].severity().prob(0), 0.0);
    }

    #[test]
    fn spec_json_errors_name_the_field() {
        let bad_p = r#"{"summands": [{"p": 1.5, "severity": {"type": "geometric", "alpha": 0.2}}]}"#;
        match spec_from_json(bad_p) {
            Err(Error::Spec { location, .. }) => assert_eq!(location, "summands[0].p"),
            other => panic!("expected spec error, got {other:?}"),
        }

        let bad_alpha =
            r#"{"summands": [{"p": 0.1, "severity": {"type": "geometric", "alpha": 2.0}}]}"#;
        match spec_from_json(bad_alpha) {
            Err(Error::Spec { location, .. }) => {
                assert_eq!(location, "summands[0].severity.alpha")
            }
            other => panic!("expected spec error, got {other:?}"),
        }

        let bad_sum = r#"{"summands": [{"p": 0.1, "severity": {"type": "pmf", "probs": [0.5, 0.3]}}]}"#;
        match spec_from_json(bad_sum) {
            Err(Error::Spec { location, .. }) => {
                assert_eq!(location, "summands[0].severity.probs")
            }
            other => panic!("expected spec error, got {other:?}"),
        }

        let empty = r#"{"summands": []}"#;
        match spec_from_json(empty) {
            Err(Error::Spec { location, .. }) => assert_eq!(location, "summands"),
            other => panic!("expected spec error, got {other:?}"),
        }

        let syntax = r#"{"summands": ["#;
        match spec_from_json(syntax) {
            Err(Error::Spec { location, .. }) => {
                assert!(location.starts_with("line "), "location = {location}")
            }
            other => panic!("expected spec error, got {other:?}"),
        }
    }

    #[test]
    fn pmf_csv_keeps_the_tail() {
        let q = Severity::geometric(0.5, &TruncationPolicy::default()).unwrap();
        let csv = pmf_to_csv(q.pmf());
        assert!(csv.starts_with("k,probability\n0,0\n1,0.5\n"));
        assert!(csv.lines().last().unwrap().starts_with("tail,"));
    }

    #[test]
    fn report_csv_single_row() {
        let point = GridPoint::EqualSeverity {
            n: 10,
            lambda: 1.0,
            alpha: 0.3,
        };
        let report = full_report(&point.build(&TruncationPolicy::default()).unwrap()).unwrap();
        let csv = report_to_csv(&report);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("lambda,q,thm1_kl,"));
        assert!(csv.lines().nth(1).unwrap().starts_with("1,"));
    }
}
