use biocal::cli::{
    cmd_analyze, cmd_generate, cmd_reliability, cmd_simulate, CliError, Lambda0Mode, RunConfig,
    ScenarioSource,
};
use biocal::datagen::EffectSizes;
use biocal::estimators::Strategy;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "biocal", version)]
#[command(about = "Measurement-error calibration strategies for biomarker exposures in survival models")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo simulation study and write metric reports.
    Simulate(SimulateArgs),
    /// Generate one synthetic cohort CSV.
    Generate(GenerateArgs),
    /// Fit the descriptive toolkit on a cohort CSV.
    Analyze(AnalyzeArgs),
    /// ICC/CV table from a long-format duplicate-assay CSV.
    Reliability(ReliabilityArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Lambda0ModeArg {
    /// Re-derive the baseline rate to hit the censoring target.
    Auto,
    /// Use the scenario's stored baseline rate.
    Fixed,
}

impl From<Lambda0ModeArg> for Lambda0Mode {
    fn from(v: Lambda0ModeArg) -> Self {
        match v {
            Lambda0ModeArg::Auto => Lambda0Mode::Auto,
            Lambda0ModeArg::Fixed => Lambda0Mode::Fixed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EffectSizesArg {
    Standard,
    Alternate,
}

impl From<EffectSizesArg> for EffectSizes {
    fn from(v: EffectSizesArg) -> Self {
        match v {
            EffectSizesArg::Standard => EffectSizes::Standard,
            EffectSizesArg::Alternate => EffectSizes::Alternate,
        }
    }
}

#[derive(Args)]
struct ScenarioArgs {
    /// Built-in scenario name (beta_cryptoxanthin, lycopene, folate) or a
    /// path to a scenario file.
    #[arg(long)]
    scenario: String,
    /// Which outcome effect-size set built-ins carry.
    #[arg(long, value_enum, default_value_t = EffectSizesArg::Standard)]
    effect_sizes: EffectSizesArg,
    #[arg(long = "lambda0-mode", value_enum, default_value_t = Lambda0ModeArg::Auto)]
    lambda0_mode: Lambda0ModeArg,
    /// Target censoring fraction for auto rate calibration.
    #[arg(long, default_value_t = 0.85)]
    censoring_target: f64,
}

impl ScenarioArgs {
    fn source(&self) -> ScenarioSource {
        if self.scenario.contains('/')
            || self.scenario.contains('\\')
            || self.scenario.ends_with(".scenario")
            || self.scenario.ends_with(".txt")
        {
            ScenarioSource::File(PathBuf::from(&self.scenario))
        } else {
            ScenarioSource::Builtin(self.scenario.clone())
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Number of Monte-Carlo replications.
    #[arg(long, default_value_t = 2500)]
    sims: u64,
    /// Bootstrap replicates per replication (>= 50 for calibrated strategies).
    #[arg(long, default_value_t = 1000)]
    boot: usize,
    #[arg(long, default_value_t = 20240901)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Comma-separated strategy list; default runs all six.
    #[arg(long)]
    strategies: Option<String>,
    /// Output directory for metrics.csv, metrics.txt, records.csv, manifest.txt.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long = "n-cohort")]
    n_cohort: Option<usize>,
    #[arg(long = "n-substudy")]
    n_substudy: Option<usize>,
    #[arg(long = "n-reliability")]
    n_reliability: Option<usize>,
    #[arg(long, default_value_t = 20240901)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Cohort CSV in the canonical schema.
    #[arg(long)]
    cohort: PathBuf,
    /// Analysis spec file (flat key = value format).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory for the analysis CSVs.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReliabilityArgs {
    /// Long-format CSV with columns analyte,id,replicate_index,value.
    #[arg(long)]
    duplicates: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn parse_strategies(raw: &Option<String>) -> Result<Vec<Strategy>, CliError> {
    match raw {
        None => Ok(Strategy::ALL.to_vec()),
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                Strategy::parse(s).ok_or_else(|| CliError::Config(format!("unknown strategy `{s}`")))
            })
            .collect(),
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => {
            let config = RunConfig {
                scenario: args.scenario.source(),
                n_sims: args.sims,
                n_boot: args.boot,
                master_seed: args.seed,
                workers: args.workers,
                strategies: parse_strategies(&args.strategies)?,
                out_dir: args.out,
                lambda0_mode: args.scenario.lambda0_mode.into(),
                censoring_target: args.scenario.censoring_target,
                effect_sizes: args.scenario.effect_sizes.into(),
            };
            cmd_simulate(&config)
        }
        Command::Generate(args) => cmd_generate(
            &args.scenario.source(),
            args.scenario.effect_sizes.into(),
            args.n_cohort,
            args.n_substudy,
            args.n_reliability,
            args.seed,
            args.scenario.lambda0_mode.into(),
            args.scenario.censoring_target,
            &args.out,
        ),
        Command::Analyze(args) => cmd_analyze(&args.cohort, &args.spec, &args.out),
        Command::Reliability(args) => cmd_reliability(&args.duplicates, &args.out),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
