//! End-to-end orchestration: simulate (or ingest), predict, stabilise,
//! compile, verify, and assemble the report.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use twincheck_core::contracts::{
    build_contract, verify_contract, ContractError, ContractId, ContractParams, PreparedTrace,
};
use twincheck_core::plant;
use twincheck_core::trace::Trace;
use twincheck_core::twin::{self, LinearModel, Surrogate};
use twincheck_core::verify::{CheckError, CheckLimits, Verdict};

use crate::config::{RunConfig, TwinSource};
use crate::error::CliError;
use crate::report::{ContractStatus, Report, ReportEntry, RunMeta, Timing};

/// Read and validate a trace CSV.
pub fn ingest_trace(path: &Path) -> Result<Trace, CliError> {
    Ok(Trace::read_csv_file(path)?)
}

/// A finished pipeline run: the report plus the trace it was computed
/// from (needed for trace export and plot data).
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub report: Report,
    pub trace: Trace,
}

/// Build the surrogate described by the config, faults included.
fn build_surrogate(cfg: &RunConfig) -> Result<Surrogate, CliError> {
    let base = match cfg.twin.source {
        TwinSource::Identity => Surrogate::Identity,
        TwinSource::Weights => {
            let path = cfg.twin.weights.as_ref().expect("validated");
            Surrogate::Linear(LinearModel::load(path)?)
        }
        TwinSource::Fit => {
            let p = cfg.plant_params();
            let runs = cfg
                .train_seeds()
                .into_iter()
                .map(|seed| Ok((p, plant::run(&p, cfg.twin.fit.horizon, seed)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            twin::fit(&runs, cfg.twin.fit.ridge, cfg.seed)?
        }
        TwinSource::Trace => unreachable!("external traces skip the twin"),
    };
    cfg.twin
        .faults
        .iter()
        .try_fold(base, |s, &f| s.inject_fault(f))
        .map_err(CliError::Twin)
}

/// Produce the trace a run verifies: an external CSV, or a plant rollout
/// seen through the configured twin.
pub fn build_trace(cfg: &RunConfig) -> Result<Trace, CliError> {
    if cfg.twin.source == TwinSource::Trace {
        return ingest_trace(cfg.twin.trace.as_ref().expect("validated"));
    }
    let surrogate = build_surrogate(cfg)?;
    Ok(surrogate.rollout(&cfg.plant_params(), cfg.scenario.horizon, cfg.run_seed())?)
}

/// Check the selected contracts against one trace, in parallel. Entries
/// come back sorted by contract id; a check that exhausts its state
/// budget becomes an inconclusive entry instead of an error.
pub fn verify_trace(
    trace: &Trace,
    ids: &[ContractId],
    params: &ContractParams,
    limits: &CheckLimits,
) -> Result<Vec<ReportEntry>, CliError> {
    let prep = PreparedTrace::from_trace(trace, params).map_err(CliError::Prepare)?;
    let mut entries = ids
        .par_iter()
        .map(|&id| {
            let contract =
                build_contract(id, &prep, params).map_err(|e| CliError::Contract {
                    contract: id,
                    source: e,
                })?;
            let entry = |status, violation, states, detail| ReportEntry {
                contract: id,
                description: id.description().to_string(),
                query: contract.queries[0].text.clone(),
                status,
                violation,
                states_explored: states,
                detail,
            };
            match verify_contract(&contract, limits) {
                Ok(out) => {
                    let status = match out.verdict {
                        Verdict::Satisfied => ContractStatus::Satisfied,
                        Verdict::Violated => ContractStatus::Violated,
                    };
                    Ok(entry(status, out.violation, out.states_explored, None))
                }
                Err(ContractError::Check(CheckError::Inconclusive {
                    states_explored,
                    frontier,
                })) => Ok(entry(
                    ContractStatus::Inconclusive,
                    None,
                    states_explored,
                    Some(format!(
                        "state budget exhausted with {frontier} states still queued"
                    )),
                )),
                Err(e) => Err(CliError::Contract {
                    contract: id,
                    source: e,
                }),
            }
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    entries.sort_by_key(|e| e.contract);
    Ok(entries)
}

fn twin_label(cfg: &RunConfig) -> String {
    match cfg.twin.source {
        TwinSource::Identity => "identity".to_string(),
        TwinSource::Fit => format!("linear fit over {} training runs", cfg.twin.fit.runs),
        TwinSource::Weights => format!(
            "weights from {}",
            cfg.twin.weights.as_ref().expect("validated").display()
        ),
        TwinSource::Trace => format!(
            "external trace {}",
            cfg.twin.trace.as_ref().expect("validated").display()
        ),
    }
}

/// Run the whole pipeline for one config.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineRun, CliError> {
    cfg.validate()?;
    let started = Instant::now();
    let started_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);

    let trace = build_trace(cfg)?;
    let params = cfg.contract_params();
    let ids = cfg.selected_contracts()?;
    let limits = CheckLimits {
        max_states: cfg.verify.max_states,
        ..CheckLimits::default()
    };
    let entries = verify_trace(&trace, &ids, &params, &limits)?;

    let meta = RunMeta {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        scenario: (cfg.twin.source != TwinSource::Trace).then(|| cfg.plant_params()),
        twin: twin_label(cfg),
        faults: cfg.twin.faults.clone(),
        contract_params: params,
        trace_rows: trace.len(),
    };
    let report = Report {
        meta,
        entries,
        timing: Timing {
            started_unix_ms,
            wall_ms: started.elapsed().as_millis(),
        },
    };
    Ok(PipelineRun { report, trace })
}
