//! `solitonlab`: runs identity suites on scenario files.

use std::process::ExitCode;

fn main() -> ExitCode {
    let tol = std::env::var(solitonlab_cli::TOL_ENV).ok();
    let code = solitonlab_cli::run(std::env::args_os(), tol.as_deref(), &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code)
}
