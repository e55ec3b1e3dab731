//! Command-line front end: pmf evaluation, bound reports, figure sweeps,
//! regime slope fits, proposition checks, and the self-test battery.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad flags, malformed
//! spec files, out-of-range parameters), 2 on internal assertion failures.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use cpapprox::bounds::full_report;
use cpapprox::compound::sum_distribution;
use cpapprox::experiment::{
    pmf_to_csv, regime_n_grid, regimes_to_csv, report_to_csv, run_figure, run_proposition_checks,
    run_regimes, run_selftest, spec_from_json, proposition_p_grid, FigureName, Overrides, Regime,
    PROPOSITION_N_GRID,
};
use cpapprox::pmf::TruncationPolicy;

#[derive(Parser)]
#[command(
    name = "cpapprox",
    version,
    about = "Compound Poisson approximation bounds for sums of independent integer-valued variables"
)]
struct Cli {
    /// Truncation threshold for discarding tail mass (recorded, never
    /// renormalized away).
    #[arg(long, global = true)]
    epsilon: Option<f64>,

    /// Hard cap on stored support length.
    #[arg(long, global = true)]
    max_support: Option<usize>,

    /// Output file (standard output when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the distribution of the sum described by a JSON spec file.
    Pmf {
        /// Path to the JSON sum specification.
        #[arg(long)]
        spec: PathBuf,
    },
    /// Compute every bound and the exact distances for a JSON spec file.
    Bounds {
        /// Path to the JSON sum specification.
        #[arg(long)]
        spec: PathBuf,
    },
    /// Reproduce a named bound-comparison sweep (2a, 2b, 2c, 3a, 3b).
    Figure {
        /// Figure name.
        #[arg(long)]
        name: String,
    },
    /// Fit log-log slopes of the general-severity bounds in an asymptotic
    /// regime.
    Regimes {
        /// Asymptotic scheme: I (p = lambda/n) or II (p = sqrt(mu/n)).
        #[arg(long)]
        regime: String,
        /// Fixed lambda (regime I) or mu (regime II); defaults to 5 and
        /// 0.5 respectively.
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Check the closed-form orderings between the equal-parameter bounds.
    Propcheck,
    /// Run the built-in invariant battery.
    Selftest,
}

fn truncation_from_flags(epsilon: Option<f64>, max_support: Option<usize>) -> cpapprox::Result<TruncationPolicy> {
    let default = TruncationPolicy::default();
    TruncationPolicy::new(
        epsilon.unwrap_or(default.epsilon()),
        max_support.unwrap_or(default.max_support()),
    )
}

fn emit(out: &Option<PathBuf>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(content.as_bytes())
        }
    }
}

fn json_line<T: serde::Serialize>(value: &T) -> cpapprox::Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| cpapprox::Error::Experiment(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Runs one subcommand; `Ok(true)` means success, `Ok(false)` a
/// substantive self-test failure.
fn run(cli: &Cli) -> cpapprox::Result<bool> {
    let format = cli.format;
    match &cli.command {
        Command::Pmf { spec } => {
            let text = std::fs::read_to_string(spec).map_err(|e| cpapprox::Error::Spec {
                location: spec.display().to_string(),
                message: e.to_string(),
            })?;
            let mut sum_spec = spec_from_json(&text)?;
            if cli.epsilon.is_some() || cli.max_support.is_some() {
                let policy = truncation_from_flags(cli.epsilon, cli.max_support)?;
                sum_spec = cpapprox::compound::SumSpec::new(sum_spec.summands().to_vec(), policy)?;
            }
            let p = sum_distribution(&sum_spec);
            let content = match format.unwrap_or(Format::Csv) {
                Format::Csv => pmf_to_csv(&p),
                Format::Json => json_line(&serde_json::json!({
                    "probs": p.probs(),
                    "tail_mass": p.tail_mass(),
                    "mean": p.mean(),
                }))?,
            };
            emit(&cli.out, &content).map_err(io_error)?;
            Ok(true)
        }
        Command::Bounds { spec } => {
            let text = std::fs::read_to_string(spec).map_err(|e| cpapprox::Error::Spec {
                location: spec.display().to_string(),
                message: e.to_string(),
            })?;
            let mut sum_spec = spec_from_json(&text)?;
            if cli.epsilon.is_some() || cli.max_support.is_some() {
                let policy = truncation_from_flags(cli.epsilon, cli.max_support)?;
                sum_spec = cpapprox::compound::SumSpec::new(sum_spec.summands().to_vec(), policy)?;
            }
            let report = full_report(&sum_spec)?;
            let content = match format.unwrap_or(Format::Json) {
                Format::Json => json_line(&report)?,
                Format::Csv => report_to_csv(&report),
            };
            emit(&cli.out, &content).map_err(io_error)?;
            Ok(true)
        }
        Command::Figure { name } => {
            let figure = FigureName::from_str(name)?;
            let overrides = Overrides {
                truncation: if cli.epsilon.is_some() || cli.max_support.is_some() {
                    Some(truncation_from_flags(cli.epsilon, cli.max_support)?)
                } else {
                    None
                },
                grid: None,
            };
            let data = run_figure(figure, &overrides)?;
            let content = match format.unwrap_or(Format::Csv) {
                Format::Csv => data.to_csv(),
                Format::Json => json_line(&data)?,
            };
            emit(&cli.out, &content).map_err(io_error)?;
            Ok(true)
        }
        Command::Regimes { regime, rate } => {
            let regime = Regime::from_str(regime)?;
            let rate = rate.unwrap_or(match regime {
                Regime::I => 5.0,
                _ => 0.5,
            });
            let fits = run_regimes(regime, rate, &regime_n_grid())?;
            let content = match format.unwrap_or(Format::Csv) {
                Format::Csv => regimes_to_csv(regime, &fits),
                Format::Json => json_line(&fits)?,
            };
            emit(&cli.out, &content).map_err(io_error)?;
            Ok(true)
        }
        Command::Propcheck => {
            let report = run_proposition_checks(&proposition_p_grid(), &PROPOSITION_N_GRID)?;
            let content = match format.unwrap_or(Format::Csv) {
                Format::Csv => report.to_csv(),
                Format::Json => json_line(&report)?,
            };
            emit(&cli.out, &content).map_err(io_error)?;
            Ok(report.pass)
        }
        Command::Selftest => {
            let report = run_selftest();
            let content = match format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut text = String::new();
                    for c in &report.checks {
                        let status = if c.pass { "ok" } else { "FAIL" };
                        text.push_str(&format!("{status} {} ({})\n", c.name, c.detail));
                    }
                    text
                }
                Format::Json => json_line(&report)?,
            };
            emit(&cli.out, &content).map_err(io_error)?;
            Ok(report.all_pass())
        }
    }
}

fn io_error(e: std::io::Error) -> cpapprox::Error {
    cpapprox::Error::Experiment(format!("output failed: {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = std::panic::catch_unwind(|| run(&cli));
    match outcome {
        Ok(Ok(true)) => ExitCode::SUCCESS,
        Ok(Ok(false)) => {
            // A substantive check failed: the tool worked, the property
            // did not hold. Treated as an internal failure, not misuse.
            ExitCode::from(2)
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(_) => {
            eprintln!("internal assertion failure; please report the exact invocation");
            ExitCode::from(2)
        }
    }
}
