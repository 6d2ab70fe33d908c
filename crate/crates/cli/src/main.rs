mod args;
mod commands;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use maxrand::Error;

use args::Cli;

/// Finished output of a command, written only after everything succeeded.
pub struct Emitted {
    pub stdout: Vec<u8>,
    pub files: Vec<(PathBuf, Vec<u8>)>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(out) => {
            for (path, bytes) in &out.files {
                if let Err(e) = fs::write(path, bytes) {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(&out.stdout)
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            match &e {
                Error::Rows(rows) => {
                    for r in rows {
                        eprintln!("error: {r}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}
