use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gslab_core::report::{Report, ReportError};

mod commands;
mod config;

use config::{Command, Flags, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "gslab", version, about = "Regularity diagnostics for Gilbarg-Serrin coefficients")]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    #[command(flatten)]
    flags: Flags,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_out = std::env::var_os(config::OUT_ENV).map(PathBuf::from);
    let mut report = Report::new(cli.command.as_str());

    let file = match &cli.flags.config {
        Some(path) => config::load_file(path),
        None => Ok(RunConfig::default()),
    };
    let settings = file.and_then(|f| config::resolve(cli.command, &cli.flags, &f, env_out.clone()));
    let settings = match settings {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            report.error = Some(ReportError { kind: "ConfigInvalid".into(), message: e.to_string() });
            let dir = config::fallback_out_dir(&cli.flags, env_out);
            if let Err(w) = report.write(&dir) {
                eprintln!("error: could not write report: {w}");
            }
            return ExitCode::from(1);
        }
    };

    if let Err(e) = commands::run(&settings, &mut report) {
        eprintln!("error: {e}");
        report.set_error(&e);
    }
    for f in &report.verdicts {
        println!("{:<24} {:<22} {}", f.criterion, f.status.to_string(), f.paper_tag);
    }
    if settings.json {
        match report.write(&settings.out_dir) {
            Ok(()) => println!("report: {}", settings.out_dir.join("report.json").display()),
            Err(e) => {
                eprintln!("error: could not write report: {e}");
                return ExitCode::from(1);
            }
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
