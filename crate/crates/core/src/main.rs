use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use logsing::cli::{emit, parse_spec, run, Cli, EXIT_ERROR};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    if let Err(e) = Cli::try_parse_from(&args) {
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
            e.exit();
        }
    }
    let code = match parse_spec(&args).and_then(|spec| {
        if let Some(n) = spec.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| logsing::Error::Usage(e.to_string()))?;
        }
        let out = run(&spec)?;
        emit(&spec, &out)?;
        Ok(out.exit_code)
    }) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("logsing: {e}");
            EXIT_ERROR
        }
    };
    ExitCode::from(code as u8)
}
