mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

const EXIT_VALIDATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let threads = cli.threads;
    let result = qkmeans::par::with_threads(threads, move || match cli.command {
        Command::Seed(a) => commands::seed(&a, threads).map(|_| true),
        Command::Bench(a) => commands::bench(&a, threads).map(|_| true),
        Command::Scaling(a) => commands::scaling(&a, threads).map(|_| true),
        Command::Id(a) => commands::id(&a, threads).map(|_| true),
        Command::Validate(a) => commands::validate(&a, threads),
        Command::Gen(a) => commands::gen(&a).map(|_| true),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VALIDATION),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<qkmeans::Error>() {
            return match err {
                qkmeans::Error::Io(_) | qkmeans::Error::Parse { .. } | qkmeans::Error::EmptyDataset => EXIT_IO,
                _ => EXIT_USAGE,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return EXIT_IO;
        }
    }
    EXIT_USAGE
}
