//! Command-line driver: loads a JSON run config, executes its analysis
//! tasks against the configured evolution family, and writes
//! report.json plus CSV plot series to the output directory.
//!
//! Exit codes: 0 when every executed check passed, 2 when a property
//! or certificate check failed, 1 on config or runtime errors.

mod config;
mod csvio;
mod report;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::TaskSpec;
use report::{RunReport, RunSummary, Timings, ToolInfo};

#[derive(Parser)]
#[command(name = "datko-lab", version, about = "Stability analysis runner for evolution families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every task in the config and write the report.
    Run {
        config: PathBuf,
        /// Output directory (default: `output_dir` from the config,
        /// or `datko_out` in the working directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run tasks concurrently; the report is identical either way.
        #[arg(long)]
        parallel: bool,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse the config and build the family without running anything.
    Validate { config: PathBuf },
    /// Execute only the verify-props tasks from the config.
    Props {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        parallel: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn init_logging() {
    let mut builder = env_logger::Builder::new();
    let level = match std::env::var("DATKO_LAB_LOG") {
        Ok(v) => match v.as_str() {
            "error" => log::LevelFilter::Error,
            "warn" => log::LevelFilter::Warn,
            "info" => log::LevelFilter::Info,
            "debug" => log::LevelFilter::Debug,
            other => {
                eprintln!("DATKO_LAB_LOG={other} is not one of error|warn|info|debug; using warn");
                log::LevelFilter::Warn
            }
        },
        Err(_) => log::LevelFilter::Warn,
    };
    builder.filter_level(level).format_timestamp(None).format_target(false).init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out, parallel, seed } => run(&config, out, parallel, seed, false),
        Command::Props { config, out, parallel, seed } => run(&config, out, parallel, seed, true),
        Command::Validate { config } => validate(&config),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn validate(config_path: &Path) -> Result<bool> {
    let (config, _) = config::load(config_path)?;
    let base_dir = config_dir(config_path);
    tasks::prepare(&config, &base_dir)?;
    println!("{}: config is valid ({} tasks)", config_path.display(), config.tasks.len());
    Ok(true)
}

fn config_dir(config_path: &Path) -> PathBuf {
    config_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
}

fn run(
    config_path: &Path,
    out: Option<PathBuf>,
    parallel: bool,
    seed_override: Option<u64>,
    props_only: bool,
) -> Result<bool> {
    let started = std::time::Instant::now();
    let (config, echo) = config::load(config_path)?;
    let base_dir = config_dir(config_path);
    let (blueprint, family_summary) = tasks::prepare(&config, &base_dir)?;
    let seed = seed_override.unwrap_or(config.seed);

    let selected: Vec<(usize, &TaskSpec)> = config
        .tasks
        .iter()
        .enumerate()
        .filter(|(_, t)| !props_only || matches!(t, TaskSpec::VerifyProps(_)))
        .collect();
    log::info!(
        "running {} of {} tasks from {} (seed {seed})",
        selected.len(),
        config.tasks.len(),
        config_path.display()
    );

    let out_dir = match out {
        Some(dir) => dir,
        None => match &config.output_dir {
            Some(dir) => base_dir.join(dir),
            None => PathBuf::from("datko_out"),
        },
    };
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create output dir {}", out_dir.display()))?;

    let caveat = family_summary.caveat;
    let outcome = tasks::run_tasks(&blueprint, caveat, &selected, seed, parallel);

    let passed = outcome.fragments.iter().filter(|f| f.passed).count();
    let report = RunReport {
        tool: ToolInfo::default(),
        seed,
        family: family_summary,
        config: echo,
        summary: RunSummary {
            tasks: outcome.fragments.len(),
            passed,
            failed: outcome.fragments.len() - passed,
            all_passed: outcome.all_passed,
            all_certified: outcome.all_certified,
        },
        tasks: outcome.fragments,
        error: outcome.error.clone(),
    };
    let report_path = out_dir.join("report.json");
    std::fs::write(&report_path, report::to_pretty_json(&report)?)
        .with_context(|| format!("cannot write {}", report_path.display()))?;
    for (name, contents) in &outcome.csvs {
        let path = out_dir.join(name);
        std::fs::write(&path, contents)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let timings =
        Timings { total_ms: started.elapsed().as_millis() as u64, tasks: outcome.timings };
    std::fs::write(out_dir.join("timings.json"), report::to_pretty_json(&timings)?)
        .context("cannot write timings.json")?;
    log::info!("report written to {}", report_path.display());

    if let Some(err) = outcome.error {
        anyhow::bail!("{err}");
    }
    Ok(outcome.all_passed)
}
