use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mval::bench::{
    aggregate, read_records, run_experiment, write_results, ExperimentConfig, Summary,
};
use mval::data::load_dataset;
use mval::{Dataset, Format, ModelKind, Scalar, StrategySpec};

#[derive(Parser, Debug)]
#[command(author, version, about = "Pool-based active learning benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run strategies on datasets and write records, summary and curves.
    Run(RunArgs),
    /// Rebuild summary.json from a previous run's records.json.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Overrides the stored reference strategy.
        #[arg(long)]
        reference: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Dataset files (.csv, anything else is read as LIBSVM).
    #[arg(long, num_args = 1.., required = true, value_delimiter = ',')]
    datasets: Vec<PathBuf>,

    /// Strategy names, e.g. mval, mval:v1, mval:v2:unweighted, random, uncertainty, eer, ueer, simple_margin.
    #[arg(long, num_args = 1.., required = true, value_delimiter = ',')]
    strategies: Vec<String>,

    #[arg(long, default_value = "logreg")]
    classifier: ModelKind,

    #[arg(long, default_value_t = 100)]
    budget: usize,

    #[arg(long, default_value_t = 10)]
    reps: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    out: PathBuf,

    #[arg(long, default_value_t = 0.5)]
    train_fraction: f64,

    /// Regularisation constant (default 100 for logreg, 10 for svm).
    #[arg(long)]
    c: Option<f64>,

    /// Strategy to report W/T/L against (default: random, if present).
    #[arg(long)]
    reference: Option<String>,

    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Write RIMs and variance scores of every MVAL round here.
    #[arg(long)]
    dump_dir: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "f64")]
    precision: Precision,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => run_benchmark(args),
        Command::Report { input, reference } => {
            let file = read_records(&input)?;
            let reference = reference.or(file.config.reference.clone());
            let summary = aggregate(&file.records, reference.as_deref(), file.config.alpha);
            mval::bench::io::write_summary(&input, &summary)?;
            print_summary(&summary);
            Ok(exit_code(file.records.iter().any(|r| !r.ok())))
        }
    }
}

fn run_benchmark(args: RunArgs) -> Result<ExitCode> {
    if args.budget == 0 || args.reps == 0 {
        bail!("--budget and --reps must be positive");
    }
    if !(args.train_fraction > 0.0 && args.train_fraction < 1.0) {
        bail!("--train-fraction must lie in (0, 1)");
    }
    let strategies = args
        .strategies
        .iter()
        .map(|s| StrategySpec::parse(s, args.classifier))
        .collect::<Result<Vec<_>, _>>()?;
    let labels: Vec<String> = strategies.iter().map(StrategySpec::label).collect();
    let reference = match args.reference {
        Some(r) => {
            let r = StrategySpec::parse(&r, args.classifier)?.label();
            if !labels.contains(&r) {
                bail!("reference {r:?} is not among the strategies");
            }
            Some(r)
        }
        None => labels.iter().find(|l| l.as_str() == "random").cloned(),
    };
    let cfg = ExperimentConfig {
        strategies,
        classifier: args.classifier,
        budget: args.budget,
        reps: args.reps,
        base_seed: args.seed,
        train_fraction: args.train_fraction,
        reg_c: args.c,
        reference,
        alpha: args.alpha,
        dump_dir: args.dump_dir,
    };
    let records = match args.precision {
        Precision::F64 => run_typed::<f64>(&cfg, &args.datasets)?,
        Precision::F32 => run_typed::<f32>(&cfg, &args.datasets)?,
    };
    let summary = aggregate(&records, cfg.reference.as_deref(), cfg.alpha);
    write_results(&args.out, &cfg, &records, &summary)?;
    print_summary(&summary);
    let failed: Vec<_> = records.iter().filter(|r| !r.ok()).collect();
    for r in &failed {
        eprintln!(
            "cell failed: {} / {} / rep {}: {}",
            r.dataset,
            r.strategy,
            r.repetition,
            r.error.as_deref().unwrap_or("")
        );
    }
    Ok(exit_code(!failed.is_empty()))
}

fn run_typed<T: Scalar>(
    cfg: &ExperimentConfig,
    paths: &[PathBuf],
) -> Result<Vec<mval::ExperimentRecord>> {
    let datasets = paths
        .iter()
        .map(|p| load::<T>(p))
        .collect::<Result<Vec<Dataset<T>>>>()?;
    Ok(run_experiment(cfg, &datasets))
}

fn load<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    load_dataset(path, Format::from_path(path))
        .with_context(|| format!("loading {}", path.display()))
}

/// Error chain joined with `: `, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn exit_code(any_failed: bool) -> ExitCode {
    if any_failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn print_summary(s: &Summary) {
    println!(
        "{:<24} {:>8} {:>9} {:>6} {:>10}",
        "strategy", "mean_alc", "avg_rank", "wins", "w/t/l"
    );
    for st in &s.strategies {
        let wtl = st
            .vs_reference
            .map(|w| format!("{}/{}/{}", w.wins, w.ties, w.losses))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<24} {:>8.4} {:>9.3} {:>6} {:>10}",
            st.strategy, st.mean_alc, st.average_rank, st.win_times, wtl
        );
    }
}
