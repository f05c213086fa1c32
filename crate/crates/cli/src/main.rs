use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{CommandFactory, Parser, Subcommand};
use lieposenet::checks::{self, Suite};
use lieposenet_cli::report::{build_report, load_summaries, write_report};
use lieposenet_cli::{run_experiment, CliError, LoadedConfig, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "lieposenet", version, about = "Pose-regression loss verification and synthetic experiments")]
struct Cli {
    /// Worker threads for training runs (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,

    /// Training seed used for every run instead of the configured ones.
    #[arg(long, global = true)]
    seed_override: Option<u64>,

    /// Directory for run files or report files.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a seeded verification suite and print the largest observed errors.
    Check {
        #[arg(value_parser = PossibleValuesParser::new(Suite::ALL.map(|s| s.as_str()))
            .map(|s| s.parse::<Suite>().expect("listed suite")))]
        suite: Suite,
    },
    /// Train every (method, scene) pair of an experiment config.
    Train { config: PathBuf },
    /// Build the median-error table and curve data from a run directory.
    Report { dir: PathBuf },
}

fn check(suite: Suite) -> Result<bool, CliError> {
    let report = checks::run(suite).map_err(|e| CliError::core(format!("suite {suite}"), e))?;
    print!("{report}");
    let passed = report.passed();
    println!("{suite}: {}", if passed { "all tolerances met" } else { "tolerance violated" });
    Ok(passed)
}

fn train(cli: &Cli, config: &Path) -> Result<bool, CliError> {
    let loaded = LoadedConfig::from_file(config)?;
    let opts = RunOptions {
        jobs: cli.jobs.map(usize::from),
        seed_override: cli.seed_override,
        output_dir: cli.output_dir.clone(),
    };
    let out = run_experiment(&loaded, &opts)?;
    for run in out.completed() {
        let m = &run.summary.final_metrics;
        println!(
            "{}: median {:.2} m / {:.2} deg after {} epochs ({:.1} s)",
            run.summary.run_id,
            m.median_trans_m,
            m.median_rot_deg,
            run.outcome.epochs.len(),
            run.summary.wall_time_s
        );
    }
    let failures = out.failures();
    if failures.is_empty() {
        println!("wrote {} runs to {}", out.runs.len(), out.output_dir.display());
        Ok(true)
    } else {
        Err(CliError::RunsFailed(failures))
    }
}

fn report(cli: &Cli, dir: &Path) -> Result<bool, CliError> {
    let summaries = load_summaries(dir)?;
    let report = build_report(dir, &summaries)?;
    write_report(cli.output_dir.as_deref().unwrap_or(dir), &report)?;
    print!("{}", report.table.text);
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| {
        if e.use_stderr() {
            eprint!("{e}");
            eprintln!("\n{}", Cli::command().render_usage());
            std::process::exit(2);
        }
        e.exit()
    });
    let result = match &cli.command {
        Command::Check { suite } => check(*suite),
        Command::Train { config } => train(&cli, config),
        Command::Report { dir } => report(&cli, dir),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
