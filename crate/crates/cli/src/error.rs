// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

use nvreg::composer::ComposerError;
use nvreg::evolution::EvolutionError;
use nvreg::fidelity::FidelityError;
use nvreg::model::LevelError;
use nvreg::pulses::PulseError;
use nvreg::scan::ScanError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Integration(String),
    #[error("{0}")]
    Scan(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Integration(_) => 3,
            CliError::Scan(_) => 4,
        }
    }
}

impl From<EvolutionError> for CliError {
    fn from(e: EvolutionError) -> Self {
        match e {
            EvolutionError::Schedule(_) | EvolutionError::Noise(_) => CliError::Config(e.to_string()),
            EvolutionError::Step(_) | EvolutionError::Invariant { .. } => CliError::Integration(e.to_string()),
        }
    }
}

impl From<FidelityError> for CliError {
    fn from(e: FidelityError) -> Self {
        match e {
            FidelityError::Evolution(e) => e.into(),
            other => CliError::Scan(other.to_string()),
        }
    }
}

impl From<ScanError> for CliError {
    fn from(e: ScanError) -> Self {
        match e {
            ScanError::Evolution(e) => e.into(),
            ScanError::Fidelity(e) => e.into(),
            ScanError::Pulse(e) => e.into(),
            other => CliError::Scan(other.to_string()),
        }
    }
}

impl From<PulseError> for CliError {
    fn from(e: PulseError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<LevelError> for CliError {
    fn from(e: LevelError) -> Self {
        match e {
            LevelError::BadGrid => CliError::Config(e.to_string()),
            LevelError::Tracking { .. } => CliError::Scan(e.to_string()),
        }
    }
}

impl From<ComposerError> for CliError {
    fn from(e: ComposerError) -> Self {
        CliError::Config(e.to_string())
    }
}
