mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use config::RunConfig;
use error::{CliError, CliResult};

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let name = cli.command.name();
    let handler = handler_for(&cli.command);
    let mut flags = cli.command.into_flags();
    flags.seed = cli.seed;
    flags.threads = cli.threads;
    let cfg = file.overlay(flags);

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    log::debug!("running {name} on {} threads", pool.current_num_threads());
    pool.install(|| handler(cfg))
}

fn handler_for(command: &Command) -> fn(RunConfig) -> CliResult<()> {
    match command {
        Command::Phantom(_) => commands::phantom,
        Command::Noise(_) => commands::noise,
        Command::Filter(_) => commands::filter,
        Command::Segment(_) => commands::segment_cmd,
        Command::Analyze(_) => commands::analyze_cmd,
        Command::Select(_) => commands::select,
        Command::Sweep(_) => commands::sweep,
        Command::Postprocess(_) => commands::postprocess,
        Command::Pipeline(_) => commands::pipeline,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let _ = e.print();
            return CliError::Usage(e.kind().to_string()).report();
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
