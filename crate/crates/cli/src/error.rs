//! Pipeline errors, each tagged with the stage that failed.

use thiserror::Error;

use twincheck_core::contracts::{ContractError, ContractId};
use twincheck_core::plant::PlantError;
use twincheck_core::trace::TraceError;
use twincheck_core::twin::TwinError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("simulate stage: {0}")]
    Simulate(#[from] PlantError),
    #[error("twin stage: {0}")]
    Twin(#[from] TwinError),
    #[error("ingest stage: {0}")]
    Ingest(#[from] TraceError),
    #[error("stabilize stage: {0}")]
    Prepare(ContractError),
    #[error("verify stage ({contract}): {source}")]
    Contract {
        contract: ContractId,
        source: ContractError,
    },
    #[error("report stage: {0}")]
    Emit(String),
}

impl CliError {
    pub fn emit(context: impl std::fmt::Display, err: impl std::fmt::Display) -> CliError {
        CliError::Emit(format!("{context}: {err}"))
    }
}
