use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};
use qgnn_lab::{load_config, run, Experiment, Overrides};

/// Run one experiment from a TOML config. Flags override file values.
#[derive(Parser, Debug)]
#[command(name = "qgnn-lab", version)]
struct Cli {
    experiment: Experiment,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let _ = e.print();
            eprintln!("{}", Cli::command().render_usage());
            return ExitCode::from(2);
        }
    };
    let overrides = Overrides {
        experiment: Some(cli.experiment),
        seed: cli.seed,
        out: cli.out,
        threads: cli.threads,
    };
    let result = load_config(&cli.config, &overrides).and_then(|cfg| run(&cfg));
    match result {
        Ok(outcome) => {
            println!("{} [{}]", outcome.summary, outcome.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
