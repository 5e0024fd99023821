//! Subcommand execution: run an experiment and write its run directory.

use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::RunError;
use crate::experiments::{
    run_ruom_report, run_sweep_links, run_sweep_power, run_sweep_rate, run_validate, SWEEP_HEADER,
};
use crate::output::{ensure_dir, write_csv, write_json, write_manifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SweepLinks,
    SweepPower,
    SweepRate,
    Ruom,
    Validate,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::SweepLinks,
        Command::SweepPower,
        Command::SweepRate,
        Command::Ruom,
        Command::Validate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::SweepLinks => "sweep-links",
            Command::SweepPower => "sweep-power",
            Command::SweepRate => "sweep-rate",
            Command::Ruom => "ruom",
            Command::Validate => "validate",
        }
    }
}

pub const TRACE_HEADER: [&str; 10] = [
    "lambda",
    "t",
    "uav",
    "ris",
    "beta",
    "outage",
    "n_elements",
    "total_elements",
    "max_outage",
    "capacity_exhausted",
];

pub const CHECK_HEADER: [&str; 14] = [
    "check",
    "tx_power_dbm",
    "uav",
    "link_type",
    "point",
    "analytic",
    "reference",
    "gap",
    "half_width",
    "tolerance",
    "bound",
    "underpowered",
    "skipped",
    "pass",
];

#[derive(serde::Serialize)]
struct ValidateSummary {
    compared: usize,
    failed: usize,
    skipped: usize,
    underpowered: bool,
    pass: bool,
}

/// Run `cmd` and write `<out>/<command>/`. Returns the files written.
///
/// Infeasible optimizer runs and failed validations still write their
/// outputs before returning the corresponding error.
pub fn execute(cmd: Command, cfg: &ExperimentConfig, mc: bool, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    let dir = out.join(cmd.name());
    ensure_dir(&dir)?;
    let mut files = Vec::new();
    let mut deferred = None;
    match cmd {
        Command::SweepLinks | Command::SweepPower | Command::SweepRate => {
            let table = match cmd {
                Command::SweepLinks => run_sweep_links(cfg, mc)?,
                Command::SweepPower => run_sweep_power(cfg, mc)?,
                _ => run_sweep_rate(cfg, mc)?,
            };
            let path = dir.join("outage.csv");
            write_csv(&path, &SWEEP_HEADER, &table.rows)?;
            files.push(path);
        }
        Command::Ruom => {
            let report = run_ruom_report(cfg)?;
            let trace = dir.join("trace.csv");
            write_csv(&trace, &TRACE_HEADER, &report.trace_rows())?;
            let summary = dir.join("summary.json");
            write_json(&summary, &report.summaries())?;
            files.extend([trace, summary]);
            let bad = report.infeasible_lambdas();
            if !bad.is_empty() {
                deferred = Some(RunError::Infeasible(format!(
                    "outage target not met for lambda {bad:?}"
                )));
            }
        }
        Command::Validate => {
            let report = run_validate(cfg, mc)?;
            let checks = dir.join("checks.csv");
            write_csv(&checks, &CHECK_HEADER, &report.rows)?;
            let summary = ValidateSummary {
                compared: report.compared(),
                failed: report.failed(),
                skipped: report.rows.len() - report.compared(),
                underpowered: report.underpowered(),
                pass: report.failed() == 0,
            };
            let path = dir.join("summary.json");
            write_json(&path, &summary)?;
            files.extend([checks, path]);
            if summary.failed > 0 {
                deferred = Some(RunError::Validation {
                    failed: summary.failed,
                    total: summary.compared,
                });
            }
        }
    }
    write_manifest(&dir, cmd.name(), cfg, mc, &files)?;
    files.push(dir.join("manifest.json"));
    match deferred {
        Some(e) => Err(e),
        None => Ok(files),
    }
}
