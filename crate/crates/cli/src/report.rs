//! Report assembly and emission.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use twincheck_core::contracts::{ContractId, ContractParams, ViolationRecord};
use twincheck_core::trace::{Signal, Trace};
use twincheck_core::twin::FaultSpec;
use twincheck_core::plant::PlantParams;

use crate::config::ReportFormat;
use crate::error::CliError;

/// Outcome of one contract check, three-valued: a check that exhausts its
/// state budget is reported inconclusive rather than dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractStatus {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub contract: ContractId,
    pub description: String,
    /// The invariance query answered for this entry.
    pub query: String,
    pub status: ContractStatus,
    pub violation: Option<ViolationRecord>,
    pub states_explored: usize,
    /// Extra diagnostics, e.g. why a check was inconclusive.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool_version: String,
    pub seed: u64,
    /// Plant configuration, absent for externally ingested traces.
    pub scenario: Option<PlantParams>,
    /// Human-readable description of where predictions came from.
    pub twin: String,
    pub faults: Vec<FaultSpec>,
    pub contract_params: ContractParams,
    pub trace_rows: usize,
}

/// Wall-clock data; the only part of a report that varies between
/// identical runs, kept in one field so comparisons can exclude it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub wall_ms: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: RunMeta,
    /// One entry per selected contract, sorted by contract id.
    pub entries: Vec<ReportEntry>,
    pub timing: Timing,
}

impl Report {
    pub fn violations(&self) -> impl Iterator<Item = &ViolationRecord> {
        self.entries.iter().filter_map(|e| e.violation.as_ref())
    }

    /// CI-friendly exit code: 1 when any contract is violated, else 2 when
    /// any check was inconclusive, else 0.
    pub fn exit_code(&self) -> i32 {
        if self
            .entries
            .iter()
            .any(|e| e.status == ContractStatus::Violated)
        {
            1
        } else if self
            .entries
            .iter()
            .any(|e| e.status == ContractStatus::Inconclusive)
        {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    pub fn from_json_file(path: &Path) -> Result<Report, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::emit(format!("cannot read `{}`", path.display()), e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::emit(format!("cannot parse `{}`", path.display()), e))
    }

    /// Plain-text summary table.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "twin: {}   rows: {}   seed: {}\n",
            self.meta.twin, self.meta.trace_rows, self.meta.seed
        ));
        for f in &self.meta.faults {
            out.push_str(&format!(
                "fault: {:?} on {} rows [{}, {}]\n",
                f.kind,
                f.signal.name(),
                f.t_from,
                f.t_to
            ));
        }
        out.push_str(&format!(
            "{:<6} {:<13} {:>9}  {}\n",
            "id", "status", "states", "first violation"
        ));
        for e in &self.entries {
            let where_ = match &e.violation {
                Some(v) => format!("row {} (t={}s)", v.row, v.t),
                None => "-".to_string(),
            };
            let status = match e.status {
                ContractStatus::Satisfied => "satisfied",
                ContractStatus::Violated => "VIOLATED",
                ContractStatus::Inconclusive => "inconclusive",
            };
            out.push_str(&format!(
                "{:<6} {:<13} {:>9}  {}\n",
                e.contract.name(),
                status,
                e.states_explored,
                where_
            ));
        }
        let (sat, vio, inc) = self.entries.iter().fold((0, 0, 0), |(s, v, i), e| {
            match e.status {
                ContractStatus::Satisfied => (s + 1, v, i),
                ContractStatus::Violated => (s, v + 1, i),
                ContractStatus::Inconclusive => (s, v, i + 1),
            }
        });
        out.push_str(&format!(
            "{sat} satisfied, {vio} violated, {inc} inconclusive ({} ms)\n",
            self.timing.wall_ms
        ));
        out
    }
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, std::fs::File), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::emit(format!("cannot create `{}`", dir.display()), e))?;
    let path = dir.join(name);
    let file = std::fs::File::create(&path)
        .map_err(|e| CliError::emit(format!("cannot write `{}`", path.display()), e))?;
    Ok((path, file))
}

/// Write the report in one format; returns the files written. `trace` is
/// required for plot data and ignored otherwise.
pub fn emit_report(
    report: &Report,
    trace: Option<&Trace>,
    format: ReportFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    match format {
        ReportFormat::Json => {
            let (path, mut file) = create(dir, "report.json")?;
            file.write_all(report.to_json().as_bytes())
                .map_err(|e| CliError::emit(format!("cannot write `{}`", path.display()), e))?;
            Ok(vec![path])
        }
        ReportFormat::Csv => {
            let (path, file) = create(dir, "violations.csv")?;
            let mut w = csv::Writer::from_writer(file);
            let io = |e: csv::Error| CliError::emit(format!("cannot write `{}`", path.display()), e);
            w.write_record(["contract", "row", "t", "locations"])
                .map_err(io)?;
            for v in report.violations() {
                w.write_record([
                    v.contract.name().to_string(),
                    v.row.to_string(),
                    v.t.to_string(),
                    v.locations.join("|"),
                ])
                .map_err(io)?;
            }
            w.flush()
                .map_err(|e| CliError::emit(format!("cannot write `{}`", path.display()), e))?;
            Ok(vec![path])
        }
        ReportFormat::Plotdata => {
            let trace = trace.ok_or_else(|| {
                CliError::Emit("plot data needs the trace (pass --trace)".to_string())
            })?;
            emit_plotdata(report, trace, dir)
        }
    }
}

/// One `plot_<signal>.csv` per signal with truth and prediction columns,
/// plus `plot_thresholds.csv` carrying the contract reference lines, so
/// violations can be plotted against the levels they breach.
fn emit_plotdata(report: &Report, trace: &Trace, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for s in Signal::ALL {
        let name = format!("plot_{}.csv", s.name());
        let (path, file) = create(dir, &name)?;
        let mut w = csv::Writer::from_writer(file);
        let io = |e: csv::Error| CliError::emit(format!("cannot write `{}`", path.display()), e);
        w.write_record(["t", "truth", "pred"]).map_err(io)?;
        for row in &trace.rows {
            let pred = row
                .pred
                .map(|p| p.get(s).to_string())
                .unwrap_or_default();
            w.write_record([row.t.to_string(), row.truth.get(s).to_string(), pred])
                .map_err(io)?;
        }
        w.flush()
            .map_err(|e| CliError::emit(format!("cannot write `{}`", path.display()), e))?;
        written.push(path);
    }

    let p = &report.meta.contract_params;
    let (path, file) = create(dir, "plot_thresholds.csv")?;
    let mut w = csv::Writer::from_writer(file);
    let io = |e: csv::Error| CliError::emit(format!("cannot write `{}`", path.display()), e);
    w.write_record([
        "t",
        "t_boil",
        "wo_m_min",
        "w_m_min",
        "ideal_lo",
        "ideal_hi",
        "t_env",
    ])
    .map_err(io)?;
    for row in &trace.rows {
        w.write_record([
            row.t.to_string(),
            p.t_boil.to_string(),
            p.wo_m_min.to_string(),
            p.w_m_min.to_string(),
            p.ideal_range.0.to_string(),
            p.ideal_range.1.to_string(),
            row.t_env.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| CliError::emit(format!("cannot write `{}`", path.display()), e))?;
    written.push(path);
    Ok(written)
}
