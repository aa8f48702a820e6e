use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use apig::apig::write_trace_csv;
use apig_bench::report::{load_runs, save_runs, write_summary_csv};
use apig_bench::{generate_instances, render_markdown, run_suite, summarize, ConfigError, GenerationError, ScenarioConfig};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bench", version, about = "Run and summarize APIG / APIG-FP experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate instances, run every algorithm on each, and write the results.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `base_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (defaults to the number of cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Also write one per-iteration trace CSV per run under `<out>/traces`.
        #[arg(long)]
        traces: bool,
    },
    /// Summarize the runs.csv of a previous `run`.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "md")]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(config_path: &Path, out: &Path, seed: Option<u64>, jobs: Option<usize>, traces: bool) -> Result<()> {
    let mut config = ScenarioConfig::load(config_path)?;
    if let Some(seed) = seed {
        config.base_seed = seed;
    }
    if jobs == Some(0) {
        return Err(ConfigError::Invalid("--jobs must be at least 1".into()).into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .context("building the worker pool")?;

    let (generated, outcomes) = pool.install(|| -> Result<_> {
        let generated = generate_instances(&config)?;
        eprintln!(
            "generated {} instances from {} draws ({} infeasible, {} inactive)",
            generated.instances.len(),
            generated.draws,
            generated.infeasible_draws,
            generated.inactive_draws
        );
        let outcomes = run_suite(&config, &generated.instances);
        Ok((generated, outcomes))
    })?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_json(&out.join("config.json"), &config)?;
    write_json(&out.join("instances.json"), &generated)?;
    let rows: Vec<_> = outcomes.iter().map(|o| o.row.clone()).collect();
    save_runs(&rows, &out.join("runs.csv"))?;
    let md = render_markdown(&rows);
    fs::write(out.join("summary.md"), &md).with_context(|| format!("writing {}", out.join("summary.md").display()))?;

    if traces {
        let dir = out.join("traces");
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for o in &outcomes {
            let path = dir.join(format!("{}_{}.csv", o.row.instance_id, o.row.algorithm));
            let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_trace_csv(&o.trace, file).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    print!("{md}");
    Ok(())
}

fn report(input: &Path, format: Format) -> Result<()> {
    let rows = load_runs(&input.join("runs.csv"))?;
    match format {
        Format::Md => print!("{}", render_markdown(&rows)),
        Format::Csv => write_summary_csv(&summarize(&rows), std::io::stdout())?,
    }
    Ok(())
}

fn is_config_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.is::<ConfigError>()
            || matches!(
                c.downcast_ref::<GenerationError>(),
                Some(GenerationError::TooManyInfeasible { .. } | GenerationError::DrawLimit { .. })
            )
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out, seed, jobs, traces } => run(&config, &out, seed, jobs, traces),
        Command::Report { input, format } => report(&input, format),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_config_error(&e) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
