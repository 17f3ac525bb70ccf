//! Command-line front end: `oclust`, `simulate`, `separation-study` and `score`.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

pub fn run(cli: Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Oclust(a) => commands::cmd_oclust(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
        Command::SeparationStudy(a) => commands::cmd_separation_study(a).map(|_| ()),
        Command::Score(a) => commands::cmd_score(a),
    }
}
