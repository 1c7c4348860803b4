use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qutop::{execute, output_dir, resolve, CliError, ScenarioId, OUT_ENV};

#[derive(Parser)]
#[command(name = "qutop", version, about = "Coupled quantum kicked tops: scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write CSV series, summary.csv and run.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// fig1..fig8 or custom; overrides the config's `scenario`.
        #[arg(long)]
        scenario: Option<String>,
        /// Dotted override such as `epsilon=0.1` or `slope.window.1=80`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to the number of cores.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        jobs: Option<u32>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let Command::Run {
        config,
        scenario,
        sets,
        out,
        jobs,
    } = cli.command;
    let text = std::fs::read_to_string(&config).map_err(|e| CliError::io(&config, e))?;
    let scenario = scenario.map(|s| s.parse::<ScenarioId>()).transpose()?;
    let cfg = resolve(&text, scenario, &sets)?;
    let env = std::env::var(OUT_ENV).ok();
    let dir = output_dir(out.as_deref(), &cfg, env.as_deref());
    let summary = execute(&cfg, &dir, jobs.map(|n| n as usize))?;
    eprintln!(
        "{}: {} points, {} files in {}",
        cfg.scenario,
        summary.points,
        summary.files.len(),
        summary.out_dir.display()
    );
    if summary.not_converged > 0 {
        eprintln!("warning: {} points did not converge (status column)", summary.not_converged);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qutop: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
