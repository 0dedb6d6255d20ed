use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sqglab::io::{read_series, write_series, write_verdicts};
use sqglab::timestepper::{run, RunStatus};
use sqglab::verification::{evaluate, EstimateVerdict};

use crate::config::Scenario;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BLOW_UP: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Series { path: PathBuf, source: sqglab::Error },
    #[error("scenario `{name}`: {source}")]
    Run { name: String, source: sqglab::Error },
}

#[derive(Debug)]
pub struct Report {
    pub name: String,
    pub prefix: PathBuf,
    pub status: RunStatus,
    pub t_end: f64,
    pub steps: Option<usize>,
    pub verdicts: Vec<EstimateVerdict>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            RunStatus::BlowUp { .. } => EXIT_BLOW_UP,
            RunStatus::CheckFailed { .. } => EXIT_CHECK_FAILED,
            RunStatus::Completed if self.verdicts.iter().any(EstimateVerdict::failed) => EXIT_CHECK_FAILED,
            RunStatus::Completed => EXIT_OK,
        }
    }
}

/// Output prefix of each scenario: its `output` key, else `out` alone when
/// exactly one scenario runs, else `<out>_<name>`.
pub fn prefixes(scenarios: &[Scenario], out: &str) -> Vec<PathBuf> {
    scenarios
        .iter()
        .map(|s| match &s.output {
            Some(o) => PathBuf::from(o),
            None if scenarios.len() == 1 => PathBuf::from(out),
            None => PathBuf::from(format!("{out}_{}", s.name)),
        })
        .collect()
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn series_path(prefix: &Path) -> PathBuf {
    with_suffix(prefix, "_series.csv")
}

pub fn verdicts_path(prefix: &Path) -> PathBuf {
    with_suffix(prefix, "_verdicts.txt")
}

fn create(path: &Path) -> Result<BufWriter<File>, ExecError> {
    let io = |source| ExecError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    File::create(path).map(BufWriter::new).map_err(io)
}

fn write_verdict_file(prefix: &Path, verdicts: &[EstimateVerdict]) -> Result<(), ExecError> {
    let path = verdicts_path(prefix);
    let mut w = create(&path)?;
    write_verdicts(&mut w, verdicts)
        .and_then(|_| w.flush().map_err(Into::into))
        .map_err(|source| ExecError::Series { path, source })
}

fn verdicts_for(s: &Scenario, records: &[sqglab::functionals::DiagnosticsRecord]) -> Vec<EstimateVerdict> {
    s.checks
        .iter()
        .map(|c| evaluate(c, records, &s.run.params).expect("check names validated at parse time"))
        .collect()
}

fn run_one(s: &Scenario, prefix: &Path) -> Result<Report, ExecError> {
    let series = run(&s.run).map_err(|source| ExecError::Run { name: s.name.clone(), source })?;
    let path = series_path(prefix);
    let mut w = create(&path)?;
    write_series(&mut w, &series.records)
        .and_then(|_| w.flush().map_err(Into::into))
        .map_err(|source| ExecError::Series { path, source })?;
    let verdicts = verdicts_for(s, &series.records);
    write_verdict_file(prefix, &verdicts)?;
    Ok(Report {
        name: s.name.clone(),
        prefix: prefix.to_path_buf(),
        status: series.status,
        t_end: series.records.last().map_or(0.0, |r| r.t),
        steps: Some(series.steps),
        verdicts,
    })
}

/// Re-evaluate verdicts from an existing `<prefix>_series.csv`.
fn check_one(s: &Scenario, prefix: &Path) -> Result<Report, ExecError> {
    let path = series_path(prefix);
    let file = File::open(&path).map_err(|source| ExecError::Io { path: path.clone(), source })?;
    let records = read_series(BufReader::new(file)).map_err(|source| ExecError::Series { path, source })?;
    let verdicts = verdicts_for(s, &records);
    write_verdict_file(prefix, &verdicts)?;
    Ok(Report {
        name: s.name.clone(),
        prefix: prefix.to_path_buf(),
        status: RunStatus::Completed,
        t_end: records.last().map_or(0.0, |r| r.t),
        steps: None,
        verdicts,
    })
}

/// Run (or with `check_only`, re-check) every scenario in parallel. Results
/// come back in input order.
pub fn execute(scenarios: &[Scenario], out: &str, check_only: bool) -> Vec<Result<Report, ExecError>> {
    let prefixes = prefixes(scenarios, out);
    scenarios
        .par_iter()
        .zip(prefixes.par_iter())
        .map(|(s, p)| if check_only { check_one(s, p) } else { run_one(s, p) })
        .collect()
}

pub fn summarize(w: &mut impl Write, report: &Report) -> std::io::Result<()> {
    let status = match &report.status {
        RunStatus::Completed => format!("completed at t = {}", report.t_end),
        RunStatus::BlowUp { time } => format!("BLOW-UP at t = {time}"),
        RunStatus::CheckFailed { name, time, margin } => {
            format!("stopped at t = {time}: check `{name}` failed (margin {margin:e})")
        }
    };
    let steps = report.steps.map(|n| format!(", {n} steps")).unwrap_or_default();
    let held = report.verdicts.iter().filter(|v| v.applicable && v.holds).count();
    let failed = report.verdicts.iter().filter(|v| v.failed()).count();
    let skipped = report.verdicts.iter().filter(|v| !v.applicable).count();
    writeln!(
        w,
        "{}: {status}{steps}; checks: {held} held, {failed} failed, {skipped} not asserted -> {}",
        report.name,
        series_path(&report.prefix).display()
    )?;
    for v in report.verdicts.iter().filter(|v| v.failed()) {
        writeln!(w, "  FAILED {} (margin {:e}, tolerance {:e})", v.name, v.worst_margin, v.tolerance)?;
    }
    Ok(())
}

/// Blow-up outranks a failed check, which outranks success.
pub fn combined_exit(reports: &[Report]) -> i32 {
    let codes: Vec<i32> = reports.iter().map(Report::exit_code).collect();
    if codes.contains(&EXIT_BLOW_UP) {
        EXIT_BLOW_UP
    } else if codes.contains(&EXIT_CHECK_FAILED) {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    }
}
