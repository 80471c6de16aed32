//! Run configuration: one TOML file (or the equivalent flags) describes a
//! whole pipeline run. Every field has a default; every random draw in a
//! run derives from the single root `seed`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use twincheck_core::contracts::{ContractId, ContractParams};
use twincheck_core::plant::{random_scenario, PlantParams};
use twincheck_core::twin::FaultSpec;

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; the plant run, scenario draw and training runs all
    /// derive from it.
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub twin: TwinConfig,
    pub contracts: ContractsConfig,
    pub verify: VerifyConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub source: ScenarioSource,
    /// Rows to simulate.
    pub horizon: usize,
    /// Field-by-field overrides applied on top of the chosen base.
    pub params: PlantParamsPatch,
}

impl Default for ScenarioConfig {
    fn default() -> ScenarioConfig {
        ScenarioConfig {
            source: ScenarioSource::Default,
            horizon: 420,
            params: PlantParamsPatch::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    /// The documented default plant configuration.
    Default,
    /// A scenario drawn from the documented safe ranges, seeded from the
    /// root seed.
    Random,
}

/// Optional overrides for [`PlantParams`]; unset fields keep the base
/// value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParamsPatch {
    pub burn_rate: Option<i64>,
    pub alpha: Option<i64>,
    pub beta: Option<i64>,
    pub delta: Option<i64>,
    pub liquid_heat_rate: Option<i64>,
    pub t_boil: Option<i64>,
    pub t_env: Option<i64>,
    pub initial_wo_m: Option<i64>,
    pub initial_w_m: Option<i64>,
    pub delivery_size: Option<i64>,
    pub wo_m_min: Option<i64>,
    pub w_m_min: Option<i64>,
    pub cooling_rate: Option<i64>,
    pub delivery_latency: Option<i64>,
    pub starvation_wait: Option<i64>,
}

impl PlantParamsPatch {
    pub fn apply(&self, base: PlantParams) -> PlantParams {
        PlantParams {
            burn_rate: self.burn_rate.unwrap_or(base.burn_rate),
            alpha: self.alpha.unwrap_or(base.alpha),
            beta: self.beta.unwrap_or(base.beta),
            delta: self.delta.unwrap_or(base.delta),
            liquid_heat_rate: self.liquid_heat_rate.unwrap_or(base.liquid_heat_rate),
            t_boil: self.t_boil.unwrap_or(base.t_boil),
            t_env: self.t_env.unwrap_or(base.t_env),
            initial_wo_m: self.initial_wo_m.unwrap_or(base.initial_wo_m),
            initial_w_m: self.initial_w_m.unwrap_or(base.initial_w_m),
            delivery_size: self.delivery_size.unwrap_or(base.delivery_size),
            wo_m_min: self.wo_m_min.unwrap_or(base.wo_m_min),
            w_m_min: self.w_m_min.unwrap_or(base.w_m_min),
            cooling_rate: self.cooling_rate.unwrap_or(base.cooling_rate),
            delivery_latency: self.delivery_latency.unwrap_or(base.delivery_latency),
            starvation_wait: self.starvation_wait.unwrap_or(base.starvation_wait),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwinConfig {
    pub source: TwinSource,
    /// Weight file for `source = "weights"`.
    pub weights: Option<PathBuf>,
    /// External trace CSV for `source = "trace"`; skips plant and twin.
    pub trace: Option<PathBuf>,
    pub fit: FitConfig,
    /// Faults injected into the predictions, applied in order.
    #[serde(rename = "fault")]
    pub faults: Vec<FaultSpec>,
}

impl Default for TwinConfig {
    fn default() -> TwinConfig {
        TwinConfig {
            source: TwinSource::Identity,
            weights: None,
            trace: None,
            fit: FitConfig::default(),
            faults: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwinSource {
    /// Perfect twin: predictions copy the ground truth.
    Identity,
    /// Train a linear model on rollouts derived from the root seed.
    Fit,
    /// Load a linear model from `twin.weights`.
    Weights,
    /// Ingest `twin.trace` as the complete trace (external black box).
    Trace,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Number of training rollouts; their seeds derive from the root seed.
    pub runs: usize,
    /// Rows per training rollout.
    pub horizon: usize,
    /// Ridge regularisation strength.
    pub ridge: f64,
}

impl Default for FitConfig {
    fn default() -> FitConfig {
        FitConfig {
            runs: 8,
            horizon: 400,
            ridge: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractsConfig {
    /// Contract names to verify; empty means the full suite.
    pub ids: Vec<String>,
    /// Field-by-field overrides applied on top of the plant-aligned
    /// defaults (or the documented defaults for external traces).
    pub params: ContractParamsPatch,
}

impl Default for ContractsConfig {
    fn default() -> ContractsConfig {
        ContractsConfig {
            ids: Vec::new(),
            params: ContractParamsPatch::default(),
        }
    }
}

/// Optional overrides for [`ContractParams`]; unset fields keep the base
/// value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractParamsPatch {
    pub window: Option<usize>,
    pub epsilon: Option<i64>,
    pub lag: Option<usize>,
    pub t_boil: Option<i64>,
    pub wo_m_min: Option<i64>,
    pub w_m_min: Option<i64>,
    pub ideal_range: Option<(i64, i64)>,
    pub wood_wait: Option<i64>,
    pub alarm_hold: Option<i64>,
    pub period: Option<i64>,
}

impl ContractParamsPatch {
    pub fn apply(&self, base: ContractParams) -> ContractParams {
        ContractParams {
            window: self.window.unwrap_or(base.window),
            epsilon: self.epsilon.unwrap_or(base.epsilon),
            lag: self.lag.unwrap_or(base.lag),
            t_boil: self.t_boil.unwrap_or(base.t_boil),
            wo_m_min: self.wo_m_min.unwrap_or(base.wo_m_min),
            w_m_min: self.w_m_min.unwrap_or(base.w_m_min),
            ideal_range: self.ideal_range.unwrap_or(base.ideal_range),
            wood_wait: self.wood_wait.unwrap_or(base.wood_wait),
            alarm_hold: self.alarm_hold.unwrap_or(base.alarm_hold),
            period: self.period.unwrap_or(base.period),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// State budget per query before a check is reported inconclusive.
    pub max_states: usize,
}

impl Default for VerifyConfig {
    fn default() -> VerifyConfig {
        VerifyConfig {
            max_states: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; falls back to `$TWINCHECK_OUT_DIR`, then
    /// `./twincheck-out`.
    pub dir: Option<PathBuf>,
    pub formats: Vec<ReportFormat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    /// The full report as one JSON document.
    Json,
    /// One CSV row per violation.
    Csv,
    /// Per-signal time-series CSVs plus a thresholds file, for external
    /// plotting.
    Plotdata,
}

impl ReportFormat {
    pub fn parse_list(s: &str) -> Result<Vec<ReportFormat>, CliError> {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| match p.trim() {
                "json" => Ok(ReportFormat::Json),
                "csv" => Ok(ReportFormat::Csv),
                "plotdata" => Ok(ReportFormat::Plotdata),
                other => Err(CliError::Config(format!(
                    "unknown report format `{other}` (expected json, csv or plotdata)"
                ))),
            })
            .collect()
    }
}

/// The environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TWINCHECK_OUT_DIR";

/// Parse the compact fault flag used by `rollout`:
/// `stuck:SIGNAL:FROM:TO`, `noise:SIGNAL:FROM:TO:AMPLITUDE[:SEED]`,
/// `bias:SIGNAL:FROM:TO:OFFSET`, `lag:SIGNAL:FROM:TO:STEPS`.
pub fn parse_fault_flag(s: &str) -> Result<FaultSpec, CliError> {
    use twincheck_core::twin::FaultKind;
    use twincheck_core::Signal;

    let bad = |msg: String| CliError::Config(format!("fault `{s}`: {msg}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() < 4 {
        return Err(bad("expected kind:signal:from:to[:args]".into()));
    }
    let signal = Signal::ALL
        .into_iter()
        .find(|sig| sig.name().eq_ignore_ascii_case(parts[1]))
        .ok_or_else(|| {
            bad(format!(
                "unknown signal `{}` (expected one of {})",
                parts[1],
                Signal::ALL.map(|x| x.name()).join(", ")
            ))
        })?;
    let int = |i: usize, what: &str| -> Result<i64, CliError> {
        parts
            .get(i)
            .ok_or_else(|| bad(format!("missing {what}")))?
            .parse::<i64>()
            .map_err(|_| bad(format!("{what} `{}` is not an integer", parts[i])))
    };
    let t_from = int(2, "window start")?;
    let t_to = int(3, "window end")?;
    let arity = |n: usize| -> Result<(), CliError> {
        if parts.len() > n {
            return Err(bad(format!("too many fields for `{}`", parts[0])));
        }
        Ok(())
    };
    let kind = match parts[0] {
        "stuck" => {
            arity(4)?;
            FaultKind::StuckOutput
        }
        "noise" => {
            arity(6)?;
            FaultKind::AdditiveNoise {
                amplitude: int(4, "amplitude")?,
                seed: if parts.len() > 5 {
                    int(5, "noise seed")? as u64
                } else {
                    0
                },
            }
        }
        "bias" => {
            arity(5)?;
            FaultKind::Bias {
                offset: int(4, "offset")?,
            }
        }
        "lag" => {
            arity(5)?;
            FaultKind::Lag {
                steps: int(4, "steps")?.max(0) as usize,
            }
        }
        other => {
            return Err(bad(format!(
                "unknown kind `{other}` (expected stuck, noise, bias or lag)"
            )))
        }
    };
    let spec = FaultSpec {
        signal,
        kind,
        t_from,
        t_to,
    };
    spec.validate()
        .map_err(|e| bad(e.to_string()))?;
    Ok(spec)
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        RunConfig::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.selected_contracts()?;
        match self.twin.source {
            TwinSource::Weights if self.twin.weights.is_none() => Err(CliError::Config(
                "twin.source = \"weights\" requires twin.weights".into(),
            )),
            TwinSource::Trace if self.twin.trace.is_none() => Err(CliError::Config(
                "twin.source = \"trace\" requires twin.trace".into(),
            )),
            _ => Ok(()),
        }?;
        if self.scenario.horizon == 0 {
            return Err(CliError::Config("scenario.horizon must be positive".into()));
        }
        if self.twin.source == TwinSource::Fit && self.twin.fit.runs == 0 {
            return Err(CliError::Config("twin.fit.runs must be positive".into()));
        }
        Ok(())
    }

    /// The contract ids to verify, in reporting order.
    pub fn selected_contracts(&self) -> Result<Vec<ContractId>, CliError> {
        if self.contracts.ids.is_empty() {
            return Ok(ContractId::ALL.to_vec());
        }
        let mut picked = Vec::new();
        for name in &self.contracts.ids {
            let id = ContractId::from_name(name).ok_or_else(|| {
                CliError::Config(format!(
                    "unknown contract `{name}` (expected one of {})",
                    ContractId::ALL.map(|c| c.name()).join(", ")
                ))
            })?;
            if !picked.contains(&id) {
                picked.push(id);
            }
        }
        picked.sort();
        Ok(picked)
    }

    /// The plant configuration this run simulates.
    pub fn plant_params(&self) -> PlantParams {
        let base = match self.scenario.source {
            ScenarioSource::Default => PlantParams::default(),
            ScenarioSource::Random => random_scenario(self.seed),
        };
        self.scenario.params.apply(base)
    }

    /// Contract thresholds: aligned with the plant for simulated runs,
    /// documented defaults for external traces, plus explicit overrides.
    pub fn contract_params(&self) -> ContractParams {
        let base = if self.twin.source == TwinSource::Trace {
            ContractParams::default()
        } else {
            ContractParams::for_plant(&self.plant_params())
        };
        self.contracts.params.apply(base)
    }

    /// Seed of the evaluation rollout.
    pub fn run_seed(&self) -> u64 {
        self.seed
    }

    /// Seeds of the training rollouts (disjoint from the evaluation seed).
    pub fn train_seeds(&self) -> Vec<u64> {
        (0..self.twin.fit.runs as u64)
            .map(|i| self.seed.wrapping_add(0x7f4a_7c15).wrapping_add(i))
            .collect()
    }

    /// Resolve the output directory: explicit config, then the
    /// environment, then `./twincheck-out`.
    pub fn out_dir(&self) -> PathBuf {
        if let Some(dir) = &self.output.dir {
            return dir.clone();
        }
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir);
            }
        }
        PathBuf::from("twincheck-out")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_means_identity_run_with_all_contracts() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.twin.source, TwinSource::Identity);
        assert_eq!(cfg.selected_contracts().unwrap().len(), 14);
        assert_eq!(cfg.plant_params(), PlantParams::default());
        assert_eq!(
            cfg.contract_params(),
            ContractParams::for_plant(&PlantParams::default())
        );
    }

    #[test]
    fn patches_override_individual_fields() {
        let cfg = RunConfig::from_toml_str(
            r#"
            seed = 9
            [scenario]
            source = "random"
            horizon = 100
            [scenario.params]
            t_boil = 12345
            [contracts]
            ids = ["FC3", "MC1", "FC3"]
            [contracts.params]
            epsilon = 75
            "#,
        )
        .unwrap();
        let plant = cfg.plant_params();
        assert_eq!(plant.t_boil, 12_345);
        let contracts = cfg.contract_params();
        assert_eq!(contracts.epsilon, 75);
        assert_eq!(contracts.t_boil, 12_345, "aligned with the plant");
        assert_eq!(
            cfg.selected_contracts().unwrap(),
            vec![ContractId::Mc1, ContractId::Fc3],
            "sorted and de-duplicated"
        );
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(RunConfig::from_toml_str("nonsense = 1").is_err());
        assert!(RunConfig::from_toml_str("[contracts]\nids = [\"XX\"]").is_err());
        assert!(RunConfig::from_toml_str("[twin]\nsource = \"weights\"").is_err());
        assert!(RunConfig::from_toml_str("[scenario]\nhorizon = 0").is_err());
    }

    #[test]
    fn fault_entries_parse_with_tagged_kinds() {
        let cfg = RunConfig::from_toml_str(
            r#"
            [[twin.fault]]
            signal = "Bo_T"
            t_from = 165
            t_to = 202
            kind = { type = "stuck_output" }

            [[twin.fault]]
            signal = "W_A"
            t_from = 5
            t_to = 45
            kind = { type = "additive_noise", amplitude = 400, seed = 0 }
            "#,
        )
        .unwrap();
        assert_eq!(cfg.twin.faults.len(), 2);
        assert_eq!(
            cfg.twin.faults[0].signal,
            twincheck_core::Signal::BoT
        );
    }

    #[test]
    fn fault_flags_parse_and_reject_garbage() {
        use twincheck_core::twin::FaultKind;
        let f = parse_fault_flag("stuck:Bo_T:165:202").unwrap();
        assert_eq!(f.kind, FaultKind::StuckOutput);
        assert_eq!((f.t_from, f.t_to), (165, 202));
        let f = parse_fault_flag("noise:w_a:5:45:400:7").unwrap();
        assert_eq!(
            f.kind,
            FaultKind::AdditiveNoise {
                amplitude: 400,
                seed: 7
            }
        );
        let f = parse_fault_flag("bias:B_T:0:10:250").unwrap();
        assert_eq!(f.kind, FaultKind::Bias { offset: 250 });
        let f = parse_fault_flag("lag:W_M:0:100:3").unwrap();
        assert_eq!(f.kind, FaultKind::Lag { steps: 3 });
        for bad in [
            "stuck:Bo_T:165",
            "melt:Bo_T:1:2",
            "stuck:XX:1:2",
            "noise:W_A:5:45",
            "noise:W_A:5:45:400:7:9",
            "stuck:Bo_T:20:10",
            "lag:W_M:0:100:0",
        ] {
            assert!(parse_fault_flag(bad).is_err(), "{bad} should be rejected");
        }
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = RunConfig::from_toml_str(
            r#"
            seed = 3
            [twin]
            source = "fit"
            [output]
            formats = ["json", "plotdata"]
            "#,
        )
        .unwrap();
        let text = cfg.to_toml_string();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
