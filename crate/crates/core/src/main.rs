use clap::error::ErrorKind;
use clap::Parser;
use marginfit::cli::{run, Cli};

/// Exit codes: 0 success, 1 usage error, 2 data or convergence error.
fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // clap renders help to stdout and errors to stderr on its own.
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        // One machine-readable line per failure so callers can parse it.
        eprintln!(
            "{}",
            serde_json::json!({
                "record": "error",
                "version": marginfit::VERSION,
                "kind": e.kind(),
                "message": e.to_string(),
            })
        );
        std::process::exit(2);
    }
}
