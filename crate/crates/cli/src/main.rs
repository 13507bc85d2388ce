use clap::Parser;
use vqls_cli::args::{Cli, Command};
use vqls_cli::commands;
use vqls_cli::CliError;

fn main() {
    let cli = Cli::parse();
    let result = match (&cli.config, &cli.command) {
        (Some(config), None) => commands::run_manifest_file(config, None),
        (None, Some(command)) => match command {
            Command::Gen(args) => commands::cmd_gen(args),
            Command::Solve(args) => commands::cmd_solve(args),
            Command::Sweep(args) => commands::cmd_sweep(args),
            Command::Barren(args) => commands::cmd_barren(args),
            Command::Resources(args) => commands::cmd_resources(args),
            Command::Rerun(args) => commands::cmd_rerun(args),
        },
        (Some(_), Some(_)) => Err(CliError::Config(
            "pass either --config or a subcommand, not both".into(),
        )),
        (None, None) => Err(CliError::Config(
            "a subcommand or --config is required (see --help)".into(),
        )),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
