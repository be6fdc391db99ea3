//! Command-line front end for `solitonlab`.
//!
//! Exit codes: 0 when every asserted identity passes, 1 when one fails,
//! 2 for unreadable or invalid input.

use std::path::{Path, PathBuf};
use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand, ValueEnum};

use solitonlab::report::{emit_report, run_suite, Format, IdentityReport, Mode};
use solitonlab::scenario::{apply_override, load_scenario_with, scenario_from_value, LoadOptions};
use solitonlab::spacetime::catalog_listing;

/// Environment variable overriding the default identity tolerance.
pub const TOL_ENV: &str = "SOLITONLAB_TOL";

#[derive(Parser, Debug)]
#[command(name = "solitonlab", version, about = "Soliton identity checks on perfect fluid spacetimes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Json => Format::Json,
            OutputFormat::Text => Format::Text,
        }
    }
}

#[derive(clap::Args, Debug)]
struct Output {
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave out the generation timestamp so reports are byte-stable.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the metric catalog.
    Catalog {
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
    },
    /// Run every identity and solve for the soliton constants.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Run the identities only, without the soliton solve.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Re-run a scenario for each value of one numeric parameter.
    Sweep {
        file: PathBuf,
        /// Dotted path into the scenario, such as `soliton.alpha`.
        #[arg(long)]
        param: String,
        /// Comma-separated values; write `--values=-1,2` when the first is negative.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
        #[command(flatten)]
        output: Output,
    },
}

enum Failure {
    Input(String),
}

type Outcome = Result<bool, Failure>;

fn load_options(tol: Option<&str>) -> Result<LoadOptions, Failure> {
    match tol {
        None => Ok(LoadOptions::default()),
        Some(text) => match text.trim().parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(LoadOptions { default_tolerance: Some(t) }),
            _ => Err(Failure::Input(format!("{TOL_ENV} must be a positive number, got `{text}`"))),
        },
    }
}

fn timestamp(report: &mut IdentityReport, output: &Output) {
    if !output.no_timestamp {
        report.generated_at = Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    }
}

fn write(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Input(format!("cannot write to stdout: {e}"))),
    }
}

fn run_file(file: &Path, mode: Mode, output: &Output, tol: Option<&str>, stdout: &mut dyn Write) -> Outcome {
    let scenario = load_scenario_with(file, &load_options(tol)?).map_err(|e| Failure::Input(e.to_string()))?;
    let mut report = run_suite(&scenario, mode).map_err(|e| Failure::Input(e.to_string()))?;
    timestamp(&mut report, output);
    write(&emit_report(&report, output.format.into()), output.out.as_deref(), stdout)?;
    Ok(report.passed())
}

fn sweep(
    file: &Path,
    param: &str,
    values: &[f64],
    output: &Output,
    tol: Option<&str>,
    stdout: &mut dyn Write,
) -> Outcome {
    let options = load_options(tol)?;
    let text = std::fs::read_to_string(file)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", file.display())))?;
    let doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", file.display())))?;
    let mut reports = Vec::with_capacity(values.len());
    for &v in values {
        let mut d = doc.clone();
        apply_override(&mut d, param, v).map_err(|e| Failure::Input(e.to_string()))?;
        let scenario = scenario_from_value(d, &options).map_err(|e| Failure::Input(format!("{param} = {v}: {e}")))?;
        let mut report = run_suite(&scenario, Mode::Analyze).map_err(|e| Failure::Input(format!("{param} = {v}: {e}")))?;
        timestamp(&mut report, output);
        reports.push(report);
    }
    let passed = reports.iter().all(IdentityReport::passed);
    let text = match output.format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&reports).expect("reports serialize");
            s.push('\n');
            s
        }
        OutputFormat::Text => reports
            .iter()
            .zip(values)
            .map(|(r, v)| format!("== {param} = {v}\n{}", emit_report(r, Format::Text)))
            .collect::<Vec<_>>()
            .join("\n"),
    };
    write(&text, output.out.as_deref(), stdout)?;
    Ok(passed)
}

fn catalog(format: OutputFormat, stdout: &mut dyn Write) -> Outcome {
    let entries = catalog_listing();
    let text = match format {
        OutputFormat::Text => entries
            .iter()
            .map(|(name, params, line)| format!("{name:<10} {params:<20} {line}\n"))
            .collect(),
        OutputFormat::Json => {
            let list: Vec<_> = entries
                .iter()
                .map(|(name, params, line)| serde_json::json!({"name": name, "parameters": params, "line_element": line}))
                .collect();
            let mut s = serde_json::to_string_pretty(&list).expect("catalog serializes");
            s.push('\n');
            s
        }
    };
    write(&text, None, stdout)?;
    Ok(true)
}

/// Runs the command line in-process and returns the exit code.
///
/// `tol` is the value of [`TOL_ENV`], if set. Usage errors from argument
/// parsing are reported with code 2, help and version output with 0.
pub fn run<I, T>(args: I, tol: Option<&str>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(rendered.as_bytes()) } else { stdout.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Catalog { format } => catalog(*format, stdout),
        Command::Analyze { file, output } => run_file(file, Mode::Analyze, output, tol, stdout),
        Command::Verify { file, output } => run_file(file, Mode::Verify, output, tol, stdout),
        Command::Sweep { file, param, values, output } => sweep(file, param, values, output, tol, stdout),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
    }
}

#[cfg(test)]
mod tests;
