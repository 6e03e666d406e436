use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cutlab::config::{example, KINDS};
use cutlab::{merge, read_report, run, write_outputs, ExperimentConfig, HarnessError, Result, OUT_ENV};

/// Monte Carlo experiments on cut points of random walks.
///
/// Exit status: 0 on success, 2 for invalid configurations or incompatible
/// merges, 1 for I/O and runtime failures.
#[derive(Parser)]
#[command(name = "cutlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; defaults to `output_dir`, then
    /// `$CUTLAB_OUT/<kind>-<seed>`, then `cutlab-out/<kind>-<seed>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = OUT_ENV, hide = true)]
    out_root: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the experiment described by `--config`.
    Run(RunFlags),
    /// Two-walk non-intersection probabilities and the fitted exponent.
    PairExponent(RunFlags),
    /// Half-plane stay and non-intersection exponents.
    HalfplaneExponent(RunFlags),
    /// Minkowski content profile of walk cut points.
    Content(RunFlags),
    /// One-point Green's function estimates.
    GreensOne(RunFlags),
    /// Two-point Green's function estimates.
    GreensTwo(RunFlags),
    /// Separation frequencies of surviving walk pairs.
    Separation(RunFlags),
    /// Level-to-level comparison of surviving pair statistics.
    QuasiInvariance(RunFlags),
    /// Cut-detection throughput on long walks.
    CutBench(RunFlags),
    /// Pools reports of adjacent trial ranges into one run.
    Merge {
        /// Report files or run directories.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Prints an example configuration.
    ExampleConfig {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(KINDS))]
        kind: String,
    },
}

fn load(flags: &RunFlags, kind: Option<&str>) -> Result<ExperimentConfig> {
    let mut cfg = match (&flags.config, kind) {
        (Some(path), _) => ExperimentConfig::from_path(path)?,
        (None, Some(kind)) => example(kind).expect("known kind"),
        (None, None) => return Err(HarnessError::invalid("--config", "required by `run`")),
    };
    if let Some(kind) = kind {
        if cfg.experiment.kind() != kind {
            return Err(HarnessError::invalid(
                "experiment.kind",
                format!("`{}` given to the `{kind}` subcommand", cfg.experiment.kind()),
            ));
        }
    }
    if let Some(seed) = flags.seed {
        cfg.master_seed = seed;
    }
    if let Some(workers) = flags.workers {
        cfg.workers = workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(flags: &RunFlags, cfg: &ExperimentConfig) -> PathBuf {
    let leaf = format!("{}-{}", cfg.experiment.kind(), cfg.master_seed);
    flags.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| {
        flags
            .out_root
            .clone()
            .unwrap_or_else(|| Path::new("cutlab-out").to_path_buf())
            .join(leaf)
    })
}

fn execute(flags: &RunFlags, kind: Option<&str>) -> Result<()> {
    let cfg = load(flags, kind)?;
    let dir = out_dir(flags, &cfg);
    let report = run(&cfg, &dir)?;
    println!(
        "{}: {} trials in {:.2} s, outputs in {}",
        cfg.experiment.kind(),
        report.trials,
        report.wall_clock_seconds,
        dir.display()
    );
    if let Some(sps) = report.steps_per_second {
        println!("cut detection: {sps:.3e} steps/s");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(f) => execute(f, None),
        Command::PairExponent(f) => execute(f, Some("pair_exponent")),
        Command::HalfplaneExponent(f) => execute(f, Some("halfplane_exponent")),
        Command::Content(f) => execute(f, Some("content")),
        Command::GreensOne(f) => execute(f, Some("greens_one")),
        Command::GreensTwo(f) => execute(f, Some("greens_two")),
        Command::Separation(f) => execute(f, Some("separation")),
        Command::QuasiInvariance(f) => execute(f, Some("quasi_invariance")),
        Command::CutBench(f) => execute(f, Some("cut_bench")),
        Command::Merge { reports, out } => reports
            .iter()
            .map(|p| read_report(p))
            .collect::<Result<Vec<_>>>()
            .and_then(merge)
            .and_then(|(report, files)| {
                write_outputs(out, &report, &files)?;
                println!("merged {} trials into {}", report.trials, out.display());
                Ok(())
            }),
        Command::ExampleConfig { kind } => {
            print!("{}", example(kind).expect("known kind").to_toml_string());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
