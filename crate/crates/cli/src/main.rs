use std::process::ExitCode;

use clap::Parser;
use humanrate_cli::{execute, write_run, Cli, SEED_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (verb, args) = cli.command.split();
    let env_seed = std::env::var(SEED_ENV).ok();
    let run = || {
        let cfg = args.resolve(env_seed.as_deref())?;
        let out = execute(verb, &cfg)?;
        write_run(&cfg, &out)?;
        Ok::<_, humanrate_cli::CliError>((cfg, out))
    };
    match run() {
        Ok((cfg, out)) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{}: wrote {} tables to {}",
                out.command,
                out.tables.len(),
                cfg.output_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
