//! Command-line frontend for the contextual probability toolkit.

mod error;
mod pipeline;

use std::fs;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qlrep::bell::{check_inequality, verify_on_random_spaces, violation_scan, BellTriple};
use qlrep::flybox::{
    disturbing_sequential, run_scenario, DisturbingRecord, FlyBoxScenario, ScenarioOutcome,
};
use qlrep::frequency::{
    default_window, detect_stabilization, OutcomeSequence, StabilizationReport,
    DEFAULT_STABILIZATION_TOL,
};
use qlrep::kolmogorov::ContextualData;
use qlrep::qlra::{build_amplitude, PhaseBranch, DEFAULT_CHECK_TOL};

use error::{from_bell, from_frequency, from_io, from_json, from_qlra, from_sim, CliError};

#[derive(Parser)]
#[command(
    name = "qlrep",
    version,
    about = "Contextual probability toolkit: amplitude reconstruction, \
             fly-box simulation, inequality analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check statistical stabilization of a recorded outcome sequence
    Estimate(EstimateArgs),
    /// Amplitude reconstruction from contextual data
    #[command(subcommand)]
    Qlra(QlraCommand),
    /// Seeded fly-box Monte Carlo runs
    Simulate(SimulateArgs),
    /// Transition-probability inequality tools
    #[command(subcommand)]
    Bell(BellCommand),
    /// Multi-stage runs that leave an artifact manifest
    #[command(subcommand)]
    Pipeline(PipelineCommand),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct EstimateArgs {
    /// Sequence CSV: observable name on the first line, one outcome per line
    #[arg(long)]
    input: PathBuf,
    /// Trailing window length; defaults to a tenth of the sequence
    #[arg(long)]
    window: Option<usize>,
    /// Maximum tolerated drift of running frequencies inside the window
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum QlraCommand {
    /// Reconstruct the amplitude for a contextual data file
    Build(QlraBuildArgs),
}

#[derive(Args)]
struct QlraBuildArgs {
    /// Contextual data JSON
    #[arg(long)]
    input: PathBuf,
    /// Write the amplitude here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Conditioning-symmetry and residual tolerance
    #[arg(long, default_value_t = DEFAULT_CHECK_TOL)]
    tolerance: f64,
    /// Take the mirrored phase branch (conjugate state)
    #[arg(long)]
    mirror_phase: bool,
    /// Project the data onto exactly symmetric conditioning first
    #[arg(long)]
    symmetrize: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON file
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output format: the full outcome as JSON, or per-record
    /// counts and frequencies as plot-ready CSV
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Write the result here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    mode: Option<SimulateMode>,
}

#[derive(Subcommand)]
enum SimulateMode {
    /// Two-stage run with disturbing angle walls on the disc
    Disturbing {
        /// First wall angle in radians
        #[arg(long)]
        phi0: f64,
        /// Second wall angle in radians
        #[arg(long)]
        phi: f64,
        /// Samples per branch
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum BellCommand {
    /// Check the inequality on an explicit triple
    Check(BellCheckArgs),
    /// Prove the inequality on random single-space joints
    Verify(BellVerifyArgs),
    /// Scan wall angles for violating triples
    Scan(BellScanArgs),
}

#[derive(Args)]
struct BellCheckArgs {
    /// Triple JSON with marginals and the three conditionals
    #[arg(long)]
    input: PathBuf,
    /// Uniformity and slack tolerance
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct BellVerifyArgs {
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BellScanArgs {
    /// Number of wall angles per observable, spaced pi/grid apart
    #[arg(long)]
    grid: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Write the violations here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PipelineCommand {
    /// Execute the stages of a pipeline config and write a manifest
    Run(PipelineRunArgs),
}

#[derive(Args)]
struct PipelineRunArgs {
    /// Pipeline config JSON
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.render());
            err.exit_code()
        }
    }
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Estimate(args) => run_estimate(args),
        Command::Qlra(QlraCommand::Build(args)) => run_qlra_build(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Bell(BellCommand::Check(args)) => run_bell_check(args),
        Command::Bell(BellCommand::Verify(args)) => run_bell_verify(args),
        Command::Bell(BellCommand::Scan(args)) => run_bell_scan(args),
        Command::Pipeline(PipelineCommand::Run(args)) => pipeline::run(&args.config),
    }
}

/// Optional seed override from the QLRA_SEED environment variable; it
/// wins over seeds from flags, configs, and scenario files.
pub(crate) fn seed_override(stage: &str) -> Result<Option<u64>, CliError> {
    match std::env::var("QLRA_SEED") {
        Ok(raw) => raw.trim().parse::<u64>().map(Some).map_err(|_| {
            CliError::schema(
                stage,
                format!("QLRA_SEED must be an unsigned integer, got {raw:?}"),
            )
        }),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(std::env::VarError::NotUnicode(_)) => {
            Err(CliError::schema(stage, "QLRA_SEED is not valid unicode"))
        }
    }
}

fn emit(output: Option<&PathBuf>, stage: &str, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| from_io(stage, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_pretty<T: serde::Serialize>(stage: &str, value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| from_json(stage, e))?;
    text.push('\n');
    Ok(text)
}

fn run_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    const STAGE: &str = "estimate";
    let file = fs::File::open(&args.input).map_err(|e| from_io(STAGE, e))?;
    let seq =
        OutcomeSequence::read_csv(BufReader::new(file)).map_err(|e| from_frequency(STAGE, e))?;
    let window = args.window.unwrap_or_else(|| default_window(seq.len()));
    let tol = args.tol.unwrap_or(DEFAULT_STABILIZATION_TOL);
    let report =
        detect_stabilization(&seq, window, tol).map_err(|e| from_frequency(STAGE, e))?;
    let text = match args.format {
        OutputFormat::Json => to_pretty(STAGE, &report)?,
        OutputFormat::Csv => stabilization_csv(&report),
    };
    emit(args.output.as_ref(), STAGE, &text)
}

fn stabilization_csv(report: &StabilizationReport) -> String {
    let mut out = String::from("key,value\n");
    out.push_str(&format!("observable,{}\n", report.observable));
    out.push_str(&format!("stabilized,{}\n", report.stabilized));
    out.push_str(&format!("window,{}\n", report.window));
    out.push_str(&format!("max_drift,{}\n", report.max_drift));
    for (value, p) in &report.probabilities {
        out.push_str(&format!("p:{value},{p}\n"));
    }
    out
}

fn run_qlra_build(args: &QlraBuildArgs) -> Result<(), CliError> {
    const STAGE: &str = "qlra";
    let text = fs::read_to_string(&args.input).map_err(|e| from_io(STAGE, e))?;
    let mut data: ContextualData =
        serde_json::from_str(&text).map_err(|e| from_json(STAGE, e))?;
    if args.symmetrize {
        data = data.symmetrized();
    }
    let branch = if args.mirror_phase {
        PhaseBranch::Mirrored
    } else {
        PhaseBranch::Principal
    };
    let amplitude =
        build_amplitude(&data, branch, args.tolerance).map_err(|e| from_qlra(STAGE, e))?;
    if amplitude.born_residual() > args.tolerance {
        return Err(CliError::numeric(
            STAGE,
            format!(
                "squared moduli miss the marginals by {:.3e}, tolerance {:.3e}",
                amplitude.born_residual(),
                args.tolerance
            ),
        ));
    }
    let text = to_pretty(STAGE, &amplitude)?;
    emit(args.output.as_ref(), STAGE, &text)
}

fn run_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    const STAGE: &str = "simulate";
    match (&args.scenario, &args.mode) {
        (Some(_), Some(_)) => Err(CliError::schema(
            STAGE,
            "pass either --scenario or the disturbing subcommand, not both",
        )),
        (None, None) => Err(CliError::schema(
            STAGE,
            "pass --scenario or use the disturbing subcommand",
        )),
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| from_io(STAGE, e))?;
            let mut scenario: FlyBoxScenario =
                serde_json::from_str(&text).map_err(|e| from_json(STAGE, e))?;
            if let Some(seed) = seed_override(STAGE)? {
                scenario.seed = seed;
            }
            let outcome = run_scenario(&scenario).map_err(|e| from_sim(STAGE, e))?;
            let text = match args.format {
                OutputFormat::Json => to_pretty(STAGE, &outcome)?,
                OutputFormat::Csv => records_csv(&outcome),
            };
            emit(args.output.as_ref(), STAGE, &text)
        }
        (None, Some(SimulateMode::Disturbing { phi0, phi, n, seed })) => {
            let seed = seed_override(STAGE)?.unwrap_or(*seed);
            let record =
                disturbing_sequential(*phi0, *phi, *n, seed).map_err(|e| from_sim(STAGE, e))?;
            let text = match args.format {
                OutputFormat::Json => to_pretty(STAGE, &record)?,
                OutputFormat::Csv => disturbing_csv(&record),
            };
            emit(args.output.as_ref(), STAGE, &text)
        }
    }
}

fn records_csv(outcome: &ScenarioOutcome) -> String {
    let mut out = String::from("record,outcome,count,frequency\n");
    for (name, record) in &outcome.records {
        for (label, count) in &record.counts {
            let frequency = record.frequencies[label];
            out.push_str(&format!("{name},{label},{count},{frequency}\n"));
        }
    }
    out
}

fn disturbing_csv(record: &DisturbingRecord) -> String {
    let mut out = String::from("prepared,measured,estimated,analytic\n");
    let labels = ["+1", "-1"];
    for (i, prepared) in labels.iter().enumerate() {
        for (j, measured) in labels.iter().enumerate() {
            out.push_str(&format!(
                "{prepared},{measured},{},{}\n",
                record.transitions[i][j], record.analytic[i][j]
            ));
        }
    }
    out
}

fn run_bell_check(args: &BellCheckArgs) -> Result<(), CliError> {
    const STAGE: &str = "bell";
    let text = fs::read_to_string(&args.input).map_err(|e| from_io(STAGE, e))?;
    let triple: BellTriple = serde_json::from_str(&text).map_err(|e| from_json(STAGE, e))?;
    let check = check_inequality(&triple, args.tol).map_err(|e| from_bell(STAGE, e))?;
    print!("{}", to_pretty(STAGE, &check)?);
    Ok(())
}

fn run_bell_verify(args: &BellVerifyArgs) -> Result<(), CliError> {
    const STAGE: &str = "bell";
    let seed = seed_override(STAGE)?.unwrap_or(args.seed);
    let report = verify_on_random_spaces(args.trials, seed);
    print!("{}", to_pretty(STAGE, &report)?);
    if report.violations > 0 {
        return Err(CliError::numeric(
            STAGE,
            format!(
                "{} of {} random single-space joints violated the inequality",
                report.violations, report.trials
            ),
        ));
    }
    Ok(())
}

fn run_bell_scan(args: &BellScanArgs) -> Result<(), CliError> {
    const STAGE: &str = "bell";
    let violations = violation_scan(args.grid).map_err(|e| from_bell(STAGE, e))?;
    let text = match args.format {
        OutputFormat::Json => to_pretty(STAGE, &violations)?,
        OutputFormat::Csv => {
            let mut out = String::from("phi_a,phi_b,phi_c,slack\n");
            for v in &violations {
                out.push_str(&format!("{},{},{},{}\n", v.phi_a, v.phi_b, v.phi_c, v.slack));
            }
            out
        }
    };
    emit(args.output.as_ref(), STAGE, &text)
}
