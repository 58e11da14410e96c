//! `acl`: batch driver for the avoided-crossing experiments.

mod modes;
mod plot;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spec::{ExperimentSpec, Mode};

#[derive(Parser)]
#[command(name = "acl", version, about = "Wave packets through an avoided crossing: batch experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a key=value config. `ACL_<KEY>` variables override the file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write an SVG line plot next to each CSV.
        #[arg(long)]
        plots: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("config: {}", e.to_string().lines().next().unwrap_or("bad arguments"));
            return ExitCode::from(2);
        }
    };
    let Command::Run { config, mode, out, plots } = cli.command;
    let result = ExperimentSpec::load(&config, mode, out, std::env::vars()).and_then(|s| modes::run(&s, plots));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", f.reason.replace('\n', " "));
            ExitCode::from(f.code as u8)
        }
    }
}
