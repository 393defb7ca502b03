//! Command-line front end.
//!
//! Argument definitions and command bodies live here so they can be driven
//! from tests; the `slopp` binary only forwards `std::env::args` to [`run`].
//!
//! Exit codes: 0 success, 2 usage, parse or I/O error, 3 validation failure.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::io::{self, FormatError, ProgressRecord};
use crate::model::{self, Instance, Volume};
use crate::search::{self, Branching, Incumbent, SearchConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Input(String),
    #[error("{} problem(s) found", .0.len())]
    Invalid(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            _ => EXIT_ERROR,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "slopp",
    version,
    about = "Exact anytime solver for single-container 3D packing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one case of a thpack file.
    Run(RunArgs),
    /// Validate a solution file against its instance.
    Check(CheckArgs),
    /// Aggregate run reports per suite.
    Summarize(SummarizeArgs),
    /// Run the cases listed in a manifest and summarize them.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub suite: PathBuf,
    /// Case number, counted from 1.
    #[arg(long)]
    pub index: usize,
    /// Milliseconds, or a number with an `ms`, `s` or `m` suffix.
    #[arg(long, default_value = "10s", value_parser = parse_time_limit)]
    pub time_limit: Duration,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Record every improving solution, not just the last.
    #[arg(long)]
    pub emit_all: bool,
    #[arg(long)]
    pub progress: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the final report line to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value = "largest-volume")]
    pub branching: Branching,
    #[arg(long)]
    pub no_item_symmetry: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub suite: PathBuf,
    #[arg(long)]
    pub index: usize,
    pub solution: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SummarizeArgs {
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

/// Accepts `250`, `250ms`, `1.5s` and `2m`; a bare number is milliseconds.
pub fn parse_time_limit(text: &str) -> Result<Duration, String> {
    let t = text.trim();
    let (num, scale) = if let Some(n) = t.strip_suffix("ms") {
        (n, 1e-3)
    } else if let Some(n) = t.strip_suffix('s') {
        (n, 1.0)
    } else if let Some(n) = t.strip_suffix('m') {
        (n, 60.0)
    } else {
        (t, 1e-3)
    };
    let value: f64 = num.trim().parse().map_err(|_| format!("invalid time limit {text:?}"))?;
    if !value.is_finite() || value < 0.0 {
        return Err(format!("invalid time limit {text:?}"));
    }
    Ok(Duration::from_secs_f64(value * scale))
}

/// One line per solved case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: String,
    pub vu_percent: f64,
    pub left_boxes: usize,
    pub leftover_cm3: Volume,
    pub leftover_m3: f64,
    pub proved_optimal: bool,
    pub wall_time_s: f64,
    pub incumbents: usize,
}

impl RunReport {
    pub fn new(
        instance: &Instance,
        solution: &model::Solution,
        proved_optimal: bool,
        wall_time: Duration,
        incumbents: usize,
    ) -> Self {
        Self {
            instance: instance.name().to_string(),
            vu_percent: 100.0 * model::volume_utilization(instance, solution),
            left_boxes: solution.left_boxes(),
            leftover_cm3: solution.objective,
            leftover_m3: solution.objective as f64 / 1e6,
            proved_optimal,
            wall_time_s: wall_time.as_secs_f64(),
            incumbents,
        }
    }

    /// Suite part of the instance name, `thpack3` for `thpack3_017`.
    pub fn suite(&self) -> &str {
        self.instance.rsplit_once('_').map_or(&self.instance, |(s, _)| s)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, contents).map_err(io_err(path))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

pub fn load_case(suite: &Path, index: usize) -> Result<Instance, CliError> {
    let suite_doc = io::read_thpack_file(suite)?;
    suite_doc.case(index).cloned().ok_or_else(|| {
        CliError::Input(format!(
            "{}: no case {index} (file holds {})",
            suite.display(),
            suite_doc.instances.len()
        ))
    })
}

pub fn cmd_run(args: &RunArgs) -> Result<RunReport, CliError> {
    let instance = load_case(&args.suite, args.index)?;
    let config = SearchConfig {
        time_limit: args.time_limit,
        workers: args.workers.max(1),
        seed: args.seed,
        emit_all: args.emit_all,
        branching: args.branching,
        item_symmetry: !args.no_item_symmetry,
    };
    let mut progress = Vec::new();
    let (best, stats) = search::solve(&instance, &config, |inc: &Incumbent| {
        progress.push(ProgressRecord {
            elapsed: inc.found_at.as_secs_f64(),
            objective: inc.solution.objective,
            left_boxes: inc.solution.left_boxes(),
            volume_utilization: model::volume_utilization(&instance, &inc.solution),
        });
    });
    if let Some(path) = &args.progress {
        write_file(path, &io::write_progress_csv(&progress)?)?;
    }
    if let Some(path) = &args.out {
        write_file(path, &io::write_solution_json(&instance, &best, &stats)?)?;
    }
    let report = RunReport::new(&instance, &best, stats.proved_optimal, stats.wall_time, progress.len());
    if let Some(path) = &args.report {
        write_file(path, &(report.to_line() + "\n"))?;
    }
    Ok(report)
}

/// Problems with a solution file; empty means it checks out.
pub fn cmd_check(args: &CheckArgs) -> Result<Vec<String>, CliError> {
    let instance = load_case(&args.suite, args.index)?;
    let doc = io::read_solution_json(&read_file(&args.solution)?)?;
    Ok(doc.check(&instance))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub min: f64,
    pub avg: f64,
    pub max: f64,
}

impl Aggregate {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count() as f64;
        Self {
            min: values.clone().fold(f64::INFINITY, f64::min),
            avg: values.clone().sum::<f64>() / n,
            max: values.fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSummary {
    pub suite: String,
    pub runs: usize,
    pub vu_percent: Aggregate,
    pub left_boxes: Aggregate,
    pub leftover_m3: Aggregate,
}

/// Per-suite min/avg/max rows, ordered by suite name.
pub fn summarize(reports: &[RunReport]) -> Vec<SuiteSummary> {
    let mut groups: BTreeMap<&str, Vec<&RunReport>> = BTreeMap::new();
    for r in reports {
        groups.entry(r.suite()).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(suite, rs)| SuiteSummary {
            suite: suite.to_string(),
            runs: rs.len(),
            vu_percent: Aggregate::of(rs.iter().map(|r| r.vu_percent)),
            left_boxes: Aggregate::of(rs.iter().map(|r| r.left_boxes as f64)),
            leftover_m3: Aggregate::of(rs.iter().map(|r| r.leftover_m3)),
        })
        .collect()
}

pub fn format_summary(rows: &[SuiteSummary]) -> String {
    let mut out = format!(
        "{:<10} {:>4} | {:^23} | {:^23} | {:^23}\n{:<10} {:>4} | {:>7} {:>7} {:>7} | {:>7} {:>7} {:>7} | {:>7} {:>7} {:>7}\n",
        "", "", "VU (%)", "left boxes", "leftover (m3)",
        "suite", "runs", "min", "avg", "max", "min", "avg", "max", "min", "avg", "max",
    );
    for row in rows {
        out.push_str(&format!("{:<10} {:>4}", row.suite, row.runs));
        for a in [row.vu_percent, row.left_boxes, row.leftover_m3] {
            out.push_str(&format!(" | {:>7.2} {:>7.2} {:>7.2}", a.min, a.avg, a.max));
        }
        out.push('\n');
    }
    out
}

pub fn read_reports(paths: &[PathBuf]) -> Result<Vec<RunReport>, CliError> {
    let mut out = Vec::new();
    for path in paths {
        for line in read_file(path)?.lines().filter(|l| !l.trim().is_empty()) {
            let report = serde_json::from_str(line).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            out.push(report);
        }
    }
    Ok(out)
}

/// Batch description for `bench`. Relative paths are taken from the
/// manifest's own directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub suites: Vec<PathBuf>,
    #[serde(default = "default_cases")]
    pub cases_per_suite: usize,
    pub time_limit: String,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: PathBuf,
}

fn default_cases() -> usize {
    10
}

fn default_workers() -> usize {
    1
}

/// Runs every listed case not already reported in `out_dir`, then returns
/// the reports for all of them.
pub fn cmd_bench(args: &BenchArgs, log: &mut dyn Write) -> Result<Vec<RunReport>, CliError> {
    let text = read_file(&args.manifest)?;
    let manifest: Manifest =
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", args.manifest.display())))?;
    let time_limit = parse_time_limit(&manifest.time_limit).map_err(CliError::Input)?;
    let base = args.manifest.parent().unwrap_or(Path::new(""));
    let out_dir = base.join(&manifest.out_dir);
    let mut reports = Vec::new();
    for suite in &manifest.suites {
        let path = base.join(suite);
        let cases = io::read_thpack_file(&path)?
            .instances
            .len()
            .min(manifest.cases_per_suite);
        for index in 1..=cases {
            let stem = path
                .file_stem()
                .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            let name = format!("{stem}_{index:03}");
            let report_path = out_dir.join(format!("{name}.report.json"));
            if report_path.exists() {
                reports.extend(read_reports(std::slice::from_ref(&report_path))?);
                continue;
            }
            let run = RunArgs {
                suite: path.clone(),
                index,
                time_limit,
                workers: manifest.workers,
                seed: manifest.seed,
                emit_all: true,
                progress: Some(out_dir.join(format!("{name}.csv"))),
                out: Some(out_dir.join(format!("{name}.json"))),
                report: Some(report_path),
                branching: Branching::default(),
                no_item_symmetry: false,
            };
            let report = cmd_run(&run)?;
            let _ = writeln!(log, "{}", report.to_line());
            reports.push(report);
        }
    }
    Ok(reports)
}

/// Parses `args` (including the program name) and runs the command, writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|r| {
            let _ = writeln!(out, "{}", r.to_line());
        }),
        Command::Check(a) => cmd_check(a).and_then(|problems| {
            for p in &problems {
                let _ = writeln!(out, "{p}");
            }
            if problems.is_empty() {
                let _ = writeln!(out, "ok");
                Ok(())
            } else {
                Err(CliError::Invalid(problems))
            }
        }),
        Command::Summarize(a) => read_reports(&a.reports).map(|rs| {
            let _ = write!(out, "{}", format_summary(&summarize(&rs)));
        }),
        Command::Bench(a) => cmd_bench(a, err).map(|rs| {
            let _ = write!(out, "{}", format_summary(&summarize(&rs)));
        }),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
