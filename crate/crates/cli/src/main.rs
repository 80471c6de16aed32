//! `twincheck` — simulate the burner/boiler plant, roll out predictive
//! twins, and check the contract suite against the resulting traces.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use twincheck_cli::config::{
    parse_fault_flag, ReportFormat, RunConfig, ScenarioSource, TwinSource,
};
use twincheck_cli::error::CliError;
use twincheck_cli::pipeline::{run_pipeline, PipelineRun};
use twincheck_cli::report::{emit_report, Report};

#[derive(Parser)]
#[command(
    name = "twincheck",
    version,
    about = "Contract-based verification for black-box digital twins of a burner/boiler plant"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScenarioArg {
    /// The documented default plant configuration.
    Default,
    /// A seeded draw from the documented safe parameter ranges.
    Random,
}

impl From<ScenarioArg> for ScenarioSource {
    fn from(s: ScenarioArg) -> ScenarioSource {
        match s {
            ScenarioArg::Default => ScenarioSource::Default,
            ScenarioArg::Random => ScenarioSource::Random,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the plant alone and write a ground-truth trace CSV.
    Simulate {
        /// Root seed for the run.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rows to simulate.
        #[arg(long, default_value_t = 420)]
        horizon: usize,
        #[arg(long, value_enum, default_value_t = ScenarioArg::Default)]
        scenario: ScenarioArg,
        /// Output directory (default: $TWINCHECK_OUT_DIR, else ./twincheck-out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the plant and a twin side by side; write a trace CSV with
    /// prediction columns.
    Rollout {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 420)]
        horizon: usize,
        #[arg(long, value_enum, default_value_t = ScenarioArg::Default)]
        scenario: ScenarioArg,
        /// Twin source: identity, fit, or weights (with --weights FILE).
        #[arg(long, default_value = "identity")]
        twin: String,
        /// Weight file for --twin weights.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Prediction fault, repeatable: stuck:SIGNAL:FROM:TO,
        /// noise:SIGNAL:FROM:TO:AMPLITUDE[:SEED], bias:SIGNAL:FROM:TO:OFFSET,
        /// lag:SIGNAL:FROM:TO:STEPS.
        #[arg(long = "fault")]
        faults: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check contracts against an existing trace CSV.
    Verify {
        /// Trace CSV (with or without prediction columns).
        #[arg(long)]
        trace: PathBuf,
        /// Comma-separated contract ids (default: the full suite).
        #[arg(long)]
        contracts: Option<String>,
        /// Config file supplying contract parameter overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report formats to write (comma-separated: json,csv,plotdata).
        #[arg(long)]
        formats: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the whole pipeline from a config file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's root seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's report formats (comma-separated).
        #[arg(long)]
        formats: Option<String>,
    },
    /// Summarise an existing report, optionally re-emitting other formats.
    Report {
        #[arg(long)]
        report: PathBuf,
        /// Trace CSV, needed when re-emitting plot data.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        formats: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_trace(run_cfg: &RunConfig, trace: &twincheck_core::Trace) -> Result<PathBuf, CliError> {
    let dir = run_cfg.out_dir();
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::emit(format!("cannot create `{}`", dir.display()), e))?;
    let path = dir.join("trace.csv");
    trace.write_csv_file(&path)?;
    Ok(path)
}

/// Emit the requested formats and print the summary; returns the
/// report's exit code.
fn finish(run: &PipelineRun, cfg: &RunConfig, formats: &[ReportFormat]) -> Result<u8, CliError> {
    let dir = cfg.out_dir();
    let trace_path = write_trace(cfg, &run.trace)?;
    let mut written = vec![trace_path];
    for &f in formats {
        written.extend(emit_report(&run.report, Some(&run.trace), f, &dir)?);
    }
    print!("{}", run.report.render());
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(run.report.exit_code() as u8)
}

fn resolved_formats(
    flag: Option<&str>,
    cfg: &RunConfig,
) -> Result<Vec<ReportFormat>, CliError> {
    match flag {
        Some(list) => ReportFormat::parse_list(list),
        None if cfg.output.formats.is_empty() => Ok(vec![ReportFormat::Json]),
        None => Ok(cfg.output.formats.clone()),
    }
}

fn run(cmd: Cmd) -> Result<u8, CliError> {
    match cmd {
        Cmd::Simulate {
            seed,
            horizon,
            scenario,
            out,
        } => {
            let mut cfg = RunConfig::default();
            cfg.seed = seed;
            cfg.scenario.horizon = horizon;
            cfg.scenario.source = scenario.into();
            cfg.output.dir = out;
            let trace = twincheck_core::plant::run(&cfg.plant_params(), horizon, seed)?;
            let path = write_trace(&cfg, &trace)?;
            println!("wrote {}", path.display());
            Ok(0)
        }
        Cmd::Rollout {
            seed,
            horizon,
            scenario,
            twin,
            weights,
            faults,
            out,
        } => {
            let mut cfg = RunConfig::default();
            cfg.seed = seed;
            cfg.scenario.horizon = horizon;
            cfg.scenario.source = scenario.into();
            cfg.twin.source = match twin.as_str() {
                "identity" => TwinSource::Identity,
                "fit" => TwinSource::Fit,
                "weights" => TwinSource::Weights,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown twin `{other}` (expected identity, fit or weights)"
                    )))
                }
            };
            cfg.twin.weights = weights;
            cfg.twin.faults = faults
                .iter()
                .map(|s| parse_fault_flag(s))
                .collect::<Result<_, _>>()?;
            cfg.output.dir = out;
            cfg.validate()?;
            let trace = twincheck_cli::pipeline::build_trace(&cfg)?;
            let path = write_trace(&cfg, &trace)?;
            println!("wrote {}", path.display());
            Ok(0)
        }
        Cmd::Verify {
            trace,
            contracts,
            config,
            formats,
            out,
        } => {
            let mut cfg = match &config {
                Some(path) => RunConfig::from_toml_file(path)?,
                None => RunConfig::default(),
            };
            cfg.twin.source = TwinSource::Trace;
            cfg.twin.trace = Some(trace);
            if let Some(list) = contracts {
                cfg.contracts.ids = list
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().to_string())
                    .collect();
            }
            if out.is_some() {
                cfg.output.dir = out;
            }
            let formats = resolved_formats(formats.as_deref(), &cfg)?;
            let run = run_pipeline(&cfg)?;
            finish(&run, &cfg, &formats)
        }
        Cmd::Pipeline {
            config,
            seed,
            out,
            formats,
        } => {
            let mut cfg = RunConfig::from_toml_file(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if out.is_some() {
                cfg.output.dir = out;
            }
            let formats = resolved_formats(formats.as_deref(), &cfg)?;
            let run = run_pipeline(&cfg)?;
            finish(&run, &cfg, &formats)
        }
        Cmd::Report {
            report,
            trace,
            formats,
            out,
        } => {
            let rep = Report::from_json_file(&report)?;
            let trace = trace
                .map(|p| twincheck_cli::pipeline::ingest_trace(&p))
                .transpose()?;
            if let Some(list) = formats {
                let dir = out.unwrap_or_else(|| {
                    report
                        .parent()
                        .filter(|p| !p.as_os_str().is_empty())
                        .map(|p| p.to_path_buf())
                        .unwrap_or_else(|| PathBuf::from("."))
                });
                for f in ReportFormat::parse_list(&list)? {
                    for p in emit_report(&rep, trace.as_ref(), f, &dir)? {
                        println!("wrote {}", p.display());
                    }
                }
            }
            print!("{}", rep.render());
            Ok(rep.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    // Exit codes: 0 = all satisfied, 1 = violations, 2 = inconclusive,
    // 3 = any error (including bad command lines, which clap would
    // otherwise exit 2 for — that would collide with "inconclusive").
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 3 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
