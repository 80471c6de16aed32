//! Pipeline orchestration for the twin verification engine: run
//! configuration, trace ingest, parallel contract checking, and report
//! emission. The `twincheck` binary is a thin command-line layer over
//! this library.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

pub use config::{parse_fault_flag, ReportFormat, RunConfig, ScenarioSource, TwinSource};
pub use error::CliError;
pub use pipeline::{ingest_trace, run_pipeline, verify_trace, PipelineRun};
pub use report::{emit_report, ContractStatus, Report, ReportEntry, RunMeta, Timing};
