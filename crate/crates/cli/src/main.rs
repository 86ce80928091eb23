//! `cause-trigger` command line.
//!
//! Exit codes: 0 success, 1 fatal error (bad config, unreadable input), 2 the
//! analysis finished but at least one cell failed. Errors go to standard error
//! as `error[<code>]: <message>`; standard output is `key=value` lines.

use std::path::PathBuf;
use std::process::ExitCode;

use cause_trigger::changepoint::find_split;
use cause_trigger::panel::Aggregation;
use cause_trigger::pipeline::{analyze, load_scenario, AlgorithmSection, AnalysisConfig, BackendName, LagSetting, Status};
use cause_trigger::synth::{gen_trigger_scenario, ScenarioSpec, TARGET};
use cause_trigger::{run, AlgorithmConfig, Error};
use clap::{Args, Parser, Subcommand};

/// Separates causes from triggers of a shift in a target time series.
#[derive(Parser)]
#[command(name = "cause-trigger", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analysis over every grid cell of a CSV extract.
    Analyze(AnalyzeArgs),
    /// Measure recovery and false-pair rates on generated scenarios.
    SynthValidate(SynthArgs),
    /// Print the mean-shift split of one CSV column.
    Split(SplitArgs),
    /// Print the version.
    Version,
}

/// Algorithm overrides. Precedence: flags, then environment, then the
/// config file, then built-in defaults.
#[derive(Args, Default)]
struct AlgorithmFlags {
    /// Significance level of the moderation test.
    #[arg(long)]
    alpha: Option<f64>,
    /// Lag order, or `auto` to choose it by AIC.
    #[arg(long)]
    lag: Option<String>,
    /// Minimum length of the post-split interval.
    #[arg(long = "min-i2")]
    min_i2: Option<usize>,
    #[arg(long, value_parser = ["unit", "coefficient"])]
    aggregation: Option<String>,
    #[arg(long, value_parser = ["exhaustive", "genetic"])]
    backend: Option<String>,
}

impl AlgorithmFlags {
    fn apply(&self, section: &mut AlgorithmSection) -> Result<(), Error> {
        if let Some(alpha) = self.alpha {
            section.alpha = alpha;
        }
        if let Some(lag) = &self.lag {
            section.lag = match lag.parse() {
                Ok(d) => LagSetting::Fixed(d),
                Err(_) => LagSetting::Named(lag.clone()),
            };
        }
        if let Some(n) = self.min_i2 {
            section.min_size_i2 = n;
        }
        if let Some(mode) = &self.aggregation {
            section.aggregation = mode.parse::<Aggregation>()?;
        }
        if let Some(backend) = &self.backend {
            section.backend = backend.parse::<BackendName>()?;
        }
        Ok(())
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "CAUSE_TRIGGER_WORKERS")]
    workers: Option<usize>,
    #[arg(long = "output-dir")]
    output_dir: Option<PathBuf>,
    #[command(flatten)]
    algorithm: AlgorithmFlags,
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario file; the built-in planted scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Configuration file whose `[algorithm]` table is used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    repetitions: usize,
    /// Repetition `i` uses scenario seed `seed + i`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    algorithm: AlgorithmFlags,
}

#[derive(Args)]
struct SplitArgs {
    /// CSV file with a header row.
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    column: String,
    #[arg(long = "min-size", default_value_t = cause_trigger::changepoint::DEFAULT_MIN_SIZE_I2)]
    min_size: usize,
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
}

fn main() -> ExitCode {
    // usage errors exit 1 so that 2 keeps meaning "some cells failed"
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(&args),
        Command::SynthValidate(args) => cmd_synth_validate(&args),
        Command::Split(args) => cmd_split(&args),
        Command::Version => {
            println!("cause-trigger {}", env!("CARGO_PKG_VERSION"));
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error[{}]: {e}", e.code());
        ExitCode::from(1)
    })
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<ExitCode, Error> {
    let mut config = AnalysisConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(dir) = &args.output_dir {
        config.output_dir = dir.clone();
    }
    args.algorithm.apply(&mut config.algorithm)?;
    let workers = args
        .workers
        .or(config.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    let report = analyze(&config, workers)?;
    let count = |f: fn(&Status) -> bool| report.manifest.cells.iter().filter(|c| f(&c.status)).count();
    println!("cells={}", report.manifest.cells.len());
    println!("ok={}", count(|s| matches!(s, Status::Ok { .. })));
    println!("skipped={}", count(|s| matches!(s, Status::Skipped { .. })));
    println!("errors={}", report.run.n_errors());
    println!("pairs={}", report.n_pairs);
    println!("pairs_file={}", report.pairs_path.display());
    println!("plot2d_file={}", report.plot2d_path.display());
    println!("plot3d_file={}", report.plot3d_path.display());
    println!("manifest_file={}", report.manifest_path.display());
    for cell in &report.manifest.cells {
        if let Status::Error { code, reason } = &cell.status {
            eprintln!("cell-error[{code}] {}: {reason}", cell.cell);
        }
    }
    Ok(if report.run.n_errors() > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_synth_validate(args: &SynthArgs) -> Result<ExitCode, Error> {
    if args.repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
    }
    let spec = match &args.scenario {
        Some(path) => load_scenario(path)?,
        None => ScenarioSpec::default(),
    };
    let mut section = match &args.config {
        Some(path) => AnalysisConfig::load(path)?.algorithm,
        None => AlgorithmSection::default(),
    };
    args.algorithm.apply(&mut section)?;
    let config = section.resolve(args.seed)?;
    let null = ScenarioSpec {
        gamma_interaction: 0.0,
        ..spec.clone()
    };

    let (mut recovered, mut rejected, mut false_pairs) = (0, 0, 0);
    for i in 0..args.repetitions as u64 {
        let seed = args.seed.wrapping_add(i);
        let (planted, truth) = gen_trigger_scenario(&spec.with_seed(seed))?;
        let out = run(&planted, TARGET, &config)?;
        if out.pairs.iter().any(|p| p.cause == truth.cause && p.trigger == truth.trigger) {
            recovered += 1;
        }
        if out.moderation_tests.iter().any(|m| m.trigger_candidate == truth.trigger && m.is_moderator) {
            rejected += 1;
        }
        if has_pairs(&null, seed, &config)? {
            false_pairs += 1;
        }
    }
    let rate = |k: usize| k as f64 / args.repetitions as f64;
    println!("repetitions={}", args.repetitions);
    println!("recovery_rate={:.4}", rate(recovered));
    println!("false_pair_rate={:.4}", rate(false_pairs));
    println!("f_test_rejection_rate={:.4}", rate(rejected));
    Ok(ExitCode::SUCCESS)
}

fn has_pairs(spec: &ScenarioSpec, seed: u64, config: &AlgorithmConfig) -> Result<bool, Error> {
    let (panel, _) = gen_trigger_scenario(&spec.with_seed(seed))?;
    Ok(!run(&panel, TARGET, config)?.pairs.is_empty())
}

fn cmd_split(args: &SplitArgs) -> Result<ExitCode, Error> {
    let io = |e: csv::Error| Error::io(&args.csv, e);
    let mut rdr = csv::Reader::from_path(&args.csv).map_err(io)?;
    let col = rdr
        .headers()
        .map_err(io)?
        .iter()
        .position(|h| h == args.column)
        .ok_or_else(|| Error::UnknownVariable(args.column.clone()))?;
    let mut series = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(io)?;
        let field = record.get(col).unwrap_or("").trim();
        let value = field
            .parse::<f64>()
            .map_err(|_| Error::Schema(format!("line {}: bad value `{field}`", i + 2)))?;
        series.push(value);
    }
    let split = find_split(&series, args.min_size, args.threshold)?;
    println!("t1={}", split.t1);
    println!("mean_i1={}", split.mean_i1);
    println!("mean_i2={}", split.mean_i2);
    println!("delta={}", split.delta);
    println!("accepted={}", split.accepted);
    Ok(ExitCode::SUCCESS)
}
