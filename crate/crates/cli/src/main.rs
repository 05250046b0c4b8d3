mod args;
mod commands;
mod error;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Common, Config};
use commands::Verdict;
use error::CliError;

fn common(command: &Command) -> &Common {
    match command {
        Command::Laws(a) => &a.common,
        Command::Finite(a) => &a.common,
        Command::Converge(a) => &a.common,
        Command::Simulate(a) => &a.common,
        Command::Classify(a) => &a.common,
        Command::I1(a) => &a.common,
    }
}

fn run(cli: &Cli) -> Result<Verdict, CliError> {
    let common = common(&cli.command);
    let config = Config::load(common.config.as_deref())?;
    let output = common.output(&config);
    let outcome = match &cli.command {
        Command::Laws(a) => commands::laws(a, &config),
        Command::Finite(a) => commands::finite(a, &config),
        Command::Converge(a) => commands::converge(a, &config),
        Command::Simulate(a) => commands::simulate(a, &config),
        Command::Classify(a) => commands::classify(a, &config),
        Command::I1(a) => commands::i1(a, &config),
    }?;
    let text = outcome.table.render(output.format)?;
    report::emit(&text, output.out.as_deref())?;
    Ok(outcome.verdict)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::CheckFailed) => {
            eprintln!("kext: a reported check failed");
            ExitCode::from(1)
        }
        Ok(Verdict::Incomplete) => {
            eprintln!("kext: report is incomplete (classification or numeric failure)");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("kext: {e}");
            e.exit_code()
        }
    }
}
