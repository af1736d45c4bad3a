//! Command-line interface: `verify`, `bench`, `tune` and `report`
//! subcommands, plus the shared config-file format.
//!
//! Exit codes: 0 on success, 1 when verification or a measurement fails,
//! 2 for usage and I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{
    read_report, resnet50_configs, rows_to_markdown, run_bench, write_pivot, write_report,
    BenchResult, ConvConfig, ReportFormat,
};
use crate::error::{Error, Result};
use crate::selector::{autotune, supports, Algorithm};
use crate::verify::{run_verification, VerifyOptions};

#[derive(Parser, Debug)]
#[command(
    name = "convkit",
    version,
    about = "Convolution primitives: verify numeric equivalence, benchmark, autotune, report"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check every algorithm against the scalar reference within tolerance
    Verify(VerifyArgs),
    /// Time algorithms over convolution configs and emit a report
    Bench(BenchArgs),
    /// Build a selector table by timing each compatible algorithm
    Tune(TuneArgs),
    /// Convert a CSV report to a Markdown table or plot-ready series
    Report(ReportArgs),
}

#[derive(clap::Args, Debug)]
pub struct VerifyArgs {
    /// Seed for the fuzzed configurations and tensor contents
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Restrict checks to these algorithms (comma-separated)
    #[arg(long, value_delimiter = ',', value_parser = Algorithm::from_str)]
    pub algorithms: Option<Vec<Algorithm>>,
    /// Parallel degree (verification always forces 1 for reproducibility)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(clap::Args, Debug)]
pub struct BenchArgs {
    /// Batch size applied to every config
    #[arg(long, default_value_t = 1)]
    pub batch: usize,
    /// Timed repetitions per (config, algorithm)
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// Untimed warmup executions before timing
    #[arg(long, default_value_t = 2)]
    pub warmups: usize,
    /// Seed for input and filter contents
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Benchmark only these algorithms (comma-separated)
    #[arg(long, value_delimiter = ',', value_parser = Algorithm::from_str)]
    pub algorithms: Option<Vec<Algorithm>>,
    /// Config file (`window stride rows cols cin cout` per line); built-in
    /// ResNet-50 suite when omitted
    #[arg(long)]
    pub configs: Option<PathBuf>,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Parallel degree for the kernels (default: logical cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Report format
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(clap::Args, Debug)]
pub struct TuneArgs {
    /// Batch size applied to every config
    #[arg(long, default_value_t = 1)]
    pub batch: usize,
    /// Timed repetitions per (config, algorithm)
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// Seed for input and filter contents
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Config file; built-in ResNet-50 suite when omitted
    #[arg(long)]
    pub configs: Option<PathBuf>,
    /// Write the selector table here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Parallel degree for the kernels (default: logical cores)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(clap::Args, Debug)]
pub struct ReportArgs {
    /// CSV report to convert
    pub input: PathBuf,
    /// `markdown` renders a table; `csv` emits the plot-ready per-algorithm
    /// pivot (label plus one gflops column per algorithm)
    #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
    pub format: FormatArg,
    /// Write the converted report here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatArg {
    Csv,
    Markdown,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Markdown => ReportFormat::Markdown,
        }
    }
}

impl Cli {
    /// Parallel degree to install before running: `verify` forces a single
    /// thread so the reference path is bitwise reproducible.
    pub fn effective_threads(&self) -> usize {
        let requested = match &self.command {
            Command::Verify(_) => return 1,
            Command::Bench(args) => args.threads,
            Command::Tune(args) => args.threads,
            Command::Report(_) => None,
        };
        requested.unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        })
    }
}

/// Run the parsed command and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Verify(args) => cmd_verify(&args),
        Command::Bench(args) => cmd_bench(&args),
        Command::Tune(args) => cmd_tune(&args),
        Command::Report(args) => cmd_report(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Io(_)
        | Error::Csv(_)
        | Error::Parse { .. }
        | Error::MissingColumn(_)
        | Error::InvalidParams(_) => 2,
        _ => 1,
    }
}

fn write_output(output: &Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Parse the shared config-file format: one `window stride rows cols cin
/// cout` line per config, `#` comments. A trailing comment names the config;
/// otherwise a label is derived from the tuple.
pub fn parse_config_file(text: &str, batch: usize) -> Result<Vec<ConvConfig>> {
    let mut configs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let (fields_part, comment) = match raw.split_once('#') {
            Some((lhs, rhs)) => (lhs, rhs.trim()),
            None => (raw, ""),
        };
        let fields: Vec<&str> = fields_part.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 6 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 6 fields `window stride rows cols cin cout`, found {}", fields.len()),
            });
        }
        let mut nums = [0usize; 6];
        for (slot, field) in nums.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("`{field}` is not a positive integer"),
            })?;
        }
        let [window, stride, rows, cols, cin, cout] = nums;
        let label = if comment.is_empty() {
            format!("k{window}s{stride}_{rows}x{cols}x{cin}_{cout}")
        } else {
            comment.to_string()
        };
        let config = ConvConfig::from_tuple(label, window, stride, rows, cols, cin, cout, batch)
            .map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
        configs.push(config);
    }
    Ok(configs)
}

/// Write configs in the file format [`parse_config_file`] reads; labels ride
/// in trailing comments so the round trip is lossless.
pub fn write_config_file(configs: &[ConvConfig]) -> String {
    let mut out = String::from("# window stride rows cols cin cout  # label\n");
    for config in configs {
        let p = &config.params;
        out.push_str(&format!(
            "{} {} {} {} {} {}  # {}\n",
            p.window_rows,
            p.stride_rows,
            p.input.rows,
            p.input.cols,
            p.input.channels,
            p.features,
            config.label
        ));
    }
    out
}

fn load_configs(path: &Option<PathBuf>, batch: usize) -> Result<Vec<ConvConfig>> {
    match path {
        Some(path) => parse_config_file(&fs::read_to_string(path)?, batch),
        None => resnet50_configs(batch),
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let opts = VerifyOptions {
        seed: args.seed,
        algorithms: args.algorithms.clone(),
        ..VerifyOptions::default()
    };
    let report = run_verification(&opts, None)?;
    println!("verified {} configurations", report.configs_checked);
    for alg in &report.per_algorithm {
        let status = if alg.worst_error <= alg.tolerance { "PASS" } else { "FAIL" };
        println!(
            "{:<17} worst relative error {:.3e} (tolerance {:.0e}, {} checks)  {status}",
            alg.algorithm.to_string(),
            alg.worst_error,
            alg.tolerance,
            alg.checks
        );
    }
    if report.passed() {
        Ok(0)
    } else {
        for failure in &report.failures {
            eprintln!("FAIL {failure}");
        }
        Ok(1)
    }
}

fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    let configs = load_configs(&args.configs, args.batch)?;
    let requested: Vec<Algorithm> =
        args.algorithms.clone().unwrap_or_else(|| Algorithm::ALL.to_vec());
    let mut results: Vec<BenchResult> = Vec::new();
    for config in &configs {
        for &alg in requested.iter().filter(|&&a| supports(a, &config.params)) {
            results.push(run_bench(config, alg, args.reps, args.warmups, args.seed)?);
        }
    }
    write_output(&args.output, &write_report(&results, args.format.into()))?;
    Ok(0)
}

fn cmd_tune(args: &TuneArgs) -> Result<i32> {
    let configs = load_configs(&args.configs, args.batch)?;
    let params: Vec<_> = configs.iter().map(|c| c.params).collect();
    let outcome = autotune(&params, args.reps, args.seed)?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    write_output(&args.output, &outcome.table.to_file_string())?;
    eprintln!("wins per algorithm over {} configs:", configs.len());
    for (alg, wins) in outcome.win_counts() {
        eprintln!("  {:<17} {wins}", alg.to_string());
    }
    Ok(0)
}

fn cmd_report(args: &ReportArgs) -> Result<i32> {
    let rows = read_report(&fs::read_to_string(&args.input)?)?;
    let text = match args.format {
        FormatArg::Markdown => rows_to_markdown(&rows),
        FormatArg::Csv => write_pivot(&rows),
    };
    write_output(&args.output, &text)?;
    Ok(0)
}

/// Convenience used by tests and examples to load a selector table.
pub fn read_selector_table(path: &Path) -> Result<crate::selector::SelectorTable> {
    crate::selector::SelectorTable::parse(&fs::read_to_string(path)?)
}
