//! `nboxsim` — command-line front end for the N-box paradox simulator.
//!
//! Exit codes: 0 on success, 1 on domain or validation errors, 2 when
//! `verify` finds an invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nboxsim_core::experiment::{
    parse_experiment, run_experiment, ExperimentSpec, MeasurementSpec, MonteCarloSpec, QuerySpec,
    ScenarioSpec, SemanticsSpec,
};
use nboxsim_core::report::{emit_report, OutputFormat};
use nboxsim_core::verify::{run_paradox_suite, VerifyOptions, VerifySummary};

#[derive(Parser)]
#[command(
    name = "nboxsim",
    version,
    about = "Measurement statistics on pre- and post-selected ensembles: \
             the N-box paradox under pure-projection vs classical-mixture updates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact analysis of an N-box experiment.
    Analyze {
        /// Number of boxes N (the space has N+1 dimensions).
        #[arg(long)]
        n: usize,
        /// Intermediate measurement: open:<i>, all, or indist:<i>.
        #[arg(long, value_parser = parse_measurement)]
        measurement: MeasurementSpec,
        /// Update semantics for degenerate outcomes.
        #[arg(long, value_enum)]
        semantics: SemanticsArg,
        /// Queries to evaluate: conditional, unconditional, joint,
        /// residual_state, refinement_report, guessing_game:<opened>:<guess>,
        /// raw_eq9:<i>. Defaults to conditional.
        #[arg(long = "query", value_parser = parse_query)]
        queries: Vec<QuerySpec>,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
    },
    /// Run an experiment file (JSON; see the README for the schema).
    Run {
        /// Path to the experiment file.
        file: PathBuf,
    },
    /// Seeded Monte Carlo sampling with an analytic comparison table.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_measurement)]
        measurement: MeasurementSpec,
        #[arg(long, value_enum)]
        semantics: SemanticsArg,
        /// Number of trials.
        #[arg(long)]
        trials: u64,
        /// RNG seed; trial t draws from stream (seed, t).
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
    },
    /// Run the paradox invariant suite and exit nonzero on any violation.
    Verify {
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 32)]
        n_max: usize,
        /// Tolerance for accumulated identities; exact identities stay
        /// pinned at 1e-12.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SemanticsArg {
    Pure,
    Mixture,
}

impl From<SemanticsArg> for SemanticsSpec {
    fn from(value: SemanticsArg) -> Self {
        match value {
            SemanticsArg::Pure => SemanticsSpec::Pure,
            SemanticsArg::Mixture => SemanticsSpec::Mixture,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum FormatArg {
    Text,
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Text => OutputFormat::Text,
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

fn parse_measurement(s: &str) -> Result<MeasurementSpec, String> {
    if s == "all" {
        return Ok(MeasurementSpec::AllBoxes);
    }
    if let Some(i) = s.strip_prefix("open:") {
        let i = i
            .parse()
            .map_err(|_| format!("bad box index in {s:?}; expected open:<i>"))?;
        return Ok(MeasurementSpec::OpenBox { i });
    }
    if let Some(i) = s.strip_prefix("indist:") {
        let i = i
            .parse()
            .map_err(|_| format!("bad box index in {s:?}; expected indist:<i>"))?;
        return Ok(MeasurementSpec::Indistinguishable { i });
    }
    Err(format!(
        "unknown measurement {s:?}; expected open:<i>, all, or indist:<i>"
    ))
}

fn parse_query(s: &str) -> Result<QuerySpec, String> {
    match s {
        "conditional" => return Ok(QuerySpec::Conditional),
        "unconditional" => return Ok(QuerySpec::Unconditional),
        "joint" => return Ok(QuerySpec::Joint),
        "residual_state" => return Ok(QuerySpec::ResidualState),
        "refinement_report" => return Ok(QuerySpec::RefinementReport),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix("guessing_game:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if let [opened, guess] = parts.as_slice() {
            let opened = opened
                .parse()
                .map_err(|_| format!("bad opened box in {s:?}"))?;
            let guess = guess
                .parse()
                .map_err(|_| format!("bad guessed box in {s:?}"))?;
            return Ok(QuerySpec::GuessingGame { opened, guess });
        }
        return Err(format!(
            "expected guessing_game:<opened>:<guess>, got {s:?}"
        ));
    }
    if let Some(i) = s.strip_prefix("raw_eq9:") {
        let i = i.parse().map_err(|_| format!("bad box index in {s:?}"))?;
        return Ok(QuerySpec::RawEq9 { i });
    }
    Err(format!("unknown query {s:?}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version print to stdout and succeed; real usage
            // errors are validation failures.
            let code = u8::from(err.use_stderr());
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Analyze {
            n,
            measurement,
            semantics,
            queries,
            format,
        } => {
            let queries = if queries.is_empty() {
                vec![QuerySpec::Conditional]
            } else {
                queries
            };
            let spec = ExperimentSpec {
                scenario: ScenarioSpec::Nbox { n },
                measurement,
                semantics: semantics.into(),
                queries,
                montecarlo: None,
                format: format.into(),
            };
            emit(&spec, format.into())
        }
        Command::Sample {
            n,
            measurement,
            semantics,
            trials,
            seed,
            format,
        } => {
            let spec = ExperimentSpec {
                scenario: ScenarioSpec::Nbox { n },
                measurement,
                semantics: semantics.into(),
                queries: vec![QuerySpec::Conditional],
                montecarlo: Some(MonteCarloSpec { trials, seed }),
                format: format.into(),
            };
            emit(&spec, format.into())
        }
        Command::Run { file } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
            let spec = parse_experiment(&text).map_err(|e| e.to_string())?;
            let format = spec.format;
            emit(&spec, format)
        }
        Command::Verify {
            n_min,
            n_max,
            tolerance,
        } => {
            let summary = run_paradox_suite(&VerifyOptions {
                n_min,
                n_max,
                tolerance,
            })
            .map_err(|e| e.to_string())?;
            print_verify(&summary);
            if summary.all_passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
    }
}

fn emit(spec: &ExperimentSpec, format: OutputFormat) -> Result<ExitCode, String> {
    let report = run_experiment(spec).map_err(|e| e.to_string())?;
    print!("{}", emit_report(&report, format));
    Ok(ExitCode::SUCCESS)
}

fn print_verify(summary: &VerifySummary) {
    for check in &summary.checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!(
            "{status} {:<26} max defect {:>9.3e} (tol {:>7.1e})  {}",
            check.name, check.max_defect, check.tolerance, check.detail
        );
    }
    let passed = summary.checks.iter().filter(|c| c.passed).count();
    println!(
        "verify: {passed}/{} checks passed for N {}..={}",
        summary.checks.len(),
        summary.n_min,
        summary.n_max
    );
}
