use std::io;
use std::process::ExitCode;

use edg_cli::{parse_config, run, CliError};

fn main() -> ExitCode {
    let result = parse_config(std::env::args_os()).and_then(|cfg| {
        run(&cfg, &mut io::stdout().lock(), &mut io::stderr().lock()).map(|_| ())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Help(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("edg-control: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
