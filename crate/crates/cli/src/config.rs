// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration. Every section rejects unknown keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nvreg::composer::{GateIdentity, Neighbor, Objective};
use nvreg::evolution::{EvolveOptions, NoiseSpec};
use nvreg::model::RegisterModel;
use nvreg::pulses::PulseSegment;
use nvreg::scan::{BellRoute, GateKind, SequenceStep, TargetFrame, Window};
use nvreg::selftest::DEFAULT_SEED;
use nvreg::spincore::BasisLabel;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub evolve: EvolveOptions,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub levels: LevelsConfig,
    #[serde(default)]
    pub transitions: TransitionsConfig,
    #[serde(default)]
    pub pulse: Option<PulseConfig>,
    #[serde(default)]
    pub scan: Vec<ScanEntry>,
    #[serde(default)]
    pub sequence: Option<SequenceConfig>,
    #[serde(default)]
    pub compose: ComposeConfig,
    #[serde(default)]
    pub selftest: SelftestConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Nearest,
    Third,
    /// No hyperfine coupling.
    Bare,
    /// Full parameter set from `[model.custom]`.
    Custom,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub preset: Preset,
    /// Overrides the field of any preset; presets default to 25 mT.
    #[serde(default, rename = "b_mT")]
    pub b: Option<f64>,
    /// Overrides the transverse zero-field splitting E.
    #[serde(default, rename = "strain_MHz")]
    pub strain: Option<f64>,
    #[serde(default)]
    pub custom: Option<RegisterModel>,
}

pub const DEFAULT_FIELD_MT: f64 = 25.0;

impl ModelConfig {
    pub fn build(&self) -> Result<RegisterModel, String> {
        let b = self.b.unwrap_or(DEFAULT_FIELD_MT);
        let mut m = match (self.preset, &self.custom) {
            (Preset::Custom, Some(m)) => {
                let mut m = m.clone();
                if let Some(b) = self.b {
                    m.b = b;
                }
                m
            }
            (Preset::Custom, None) => return Err("preset = \"custom\" needs a [model.custom] table".into()),
            (_, Some(_)) => return Err("[model.custom] is only read with preset = \"custom\"".into()),
            (Preset::Nearest, None) => RegisterModel::nearest_neighbor(b),
            (Preset::Third, None) => RegisterModel::third_neighbor(b),
            (Preset::Bare, None) => RegisterModel::bare(b),
        };
        if let Some(e) = self.strain {
            m = m.with_strain(e);
        }
        m.validate().map_err(|e| e.to_string())?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Relative paths resolve against the working directory.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunSection {
    fn default() -> Self {
        Self { output_dir: default_output_dir(), workers: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsConfig {
    #[serde(default, rename = "b_lo_mT")]
    pub b_lo: f64,
    #[serde(default = "default_b_hi", rename = "b_hi_mT")]
    pub b_hi: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_b_hi() -> f64 {
    120.0
}

fn default_points() -> usize {
    1201
}

impl Default for LevelsConfig {
    fn default() -> Self {
        Self { b_lo: 0.0, b_hi: default_b_hi(), points: default_points() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionsConfig {
    #[serde(default)]
    pub allowed_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    /// Dressed eigenstate the run starts from.
    pub initial: BasisLabel,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Also write the full density-matrix trajectory.
    #[serde(default)]
    pub trajectory: bool,
    #[serde(default)]
    pub rotating: bool,
    pub segments: Vec<PulseSegment>,
}

fn default_samples() -> usize {
    101
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    /// Best Ω₀ and time, with traces at the optimum.
    #[default]
    Optimize,
    /// Fidelity versus Ω₀ curve.
    Curve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanEntry {
    /// File stem of the outputs; defaults to the gate name and entry index.
    #[serde(default)]
    pub name: Option<String>,
    pub gate: GateKind,
    #[serde(default)]
    pub mode: ScanMode,
    #[serde(default, rename = "omega0_grid_MHz")]
    pub omega0_grid: Option<Vec<f64>>,
    #[serde(default, rename = "omega0_lo_MHz")]
    pub omega0_lo: Option<f64>,
    #[serde(default, rename = "omega0_hi_MHz")]
    pub omega0_hi: Option<f64>,
    #[serde(default, rename = "omega0_step_MHz")]
    pub omega0_step: Option<f64>,
    #[serde(default)]
    pub refine_factor: Option<usize>,
    #[serde(default)]
    pub window: Option<Window>,
    #[serde(default, rename = "jitter_ns")]
    pub jitter: Option<f64>,
    #[serde(default)]
    pub screen_noise_free: Option<bool>,
    #[serde(default)]
    pub target_frame: Option<TargetFrame>,
}

impl ScanEntry {
    pub fn grid(&self) -> Result<Vec<f64>, String> {
        match (&self.omega0_grid, self.omega0_lo, self.omega0_hi, self.omega0_step) {
            (Some(g), None, None, None) => Ok(g.clone()),
            (None, Some(lo), Some(hi), Some(step)) => {
                if !(step > 0.0 && hi >= lo) {
                    return Err(format!("need omega0_step_MHz > 0 and omega0_hi_MHz ≥ omega0_lo_MHz, got {lo}..{hi} step {step}"));
                }
                Ok(nvreg::scan::ScanSpec::grid(lo, hi, step))
            }
            _ => Err("give either omega0_grid_MHz or all of omega0_lo_MHz, omega0_hi_MHz, omega0_step_MHz".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    #[serde(default)]
    pub route: Option<BellRoute>,
    #[serde(default, rename = "mw_MHz")]
    pub mw: Option<f64>,
    #[serde(default, rename = "rf_MHz")]
    pub rf: Option<f64>,
    #[serde(default)]
    pub steps: Vec<SequenceStep>,
    /// Defaults to the starting label of the first step.
    #[serde(default)]
    pub initial: Option<BasisLabel>,
    #[serde(default)]
    pub final_window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborChoice {
    #[default]
    Nearest,
    Third,
}

impl From<NeighborChoice> for Neighbor {
    fn from(n: NeighborChoice) -> Self {
        match n {
            NeighborChoice::Nearest => Neighbor::Nearest,
            NeighborChoice::Third => Neighbor::Third,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeConfig {
    /// Column of the built-in primitive table.
    #[serde(default)]
    pub neighbor: NeighborChoice,
    /// JSON catalog replacing the built-in one; relative to the config file.
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    /// Keep the catalog's identities; `false` starts from an empty list.
    #[serde(default = "default_true")]
    pub default_identities: bool,
    #[serde(default)]
    pub identities: Vec<GateIdentity>,
    #[serde(default = "default_objective")]
    pub objective: Objective,
}

fn default_true() -> bool {
    true
}

fn default_objective() -> Objective {
    Objective::Fidelity
}

impl Default for ComposeConfig {
    fn default() -> Self {
        Self {
            neighbor: NeighborChoice::Nearest,
            catalog: None,
            default_identities: true,
            identities: vec![],
            objective: Objective::Fidelity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestConfig {
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_instances() -> usize {
    100
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self { instances: default_instances(), seed: default_seed() }
    }
}

/// Parsed configuration with the source kept for error locations.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub source: String,
    pub path: Option<PathBuf>,
}

impl Loaded {
    pub fn defaults() -> Self {
        Self { config: RunConfig::default(), source: String::new(), path: None }
    }

    pub fn from_str(source: &str, path: Option<&Path>) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(source).map_err(|e| {
            let origin = path.map(|p| p.display().to_string()).unwrap_or_else(|| "<config>".into());
            let at = e.span().map(|s| line_col(source, s.start)).map(|(l, c)| format!(":{l}:{c}")).unwrap_or_default();
            CliError::Config(format!("{origin}{at}: {}", e.message()))
        })?;
        Ok(Self { config, source: source.to_string(), path: path.map(Path::to_path_buf) })
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: cannot read config: {e}", path.display())))?;
        Self::from_str(&source, Some(path))
    }

    /// Validation error pointing at `key` inside `section` when both occur in
    /// the source.
    pub fn error_at(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> CliError {
        let origin = self.path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<config>".into());
        match find_key_line(&self.source, section, key) {
            Some(l) => CliError::Config(format!("{origin}:{l}: [{section}] {key}: {msg}")),
            None => CliError::Config(format!("{origin}: [{section}] {key}: {msg}")),
        }
    }

    pub fn relative(&self, p: &Path) -> PathBuf {
        match self.path.as_ref().and_then(|c| c.parent()) {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }
}

fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let before = &source[..offset.min(source.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}

/// First line assigning `key` under a `[section]` or `[[section]]` header
/// (dotted subtables included). Falls back to the header line.
fn find_key_line(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header_line = None;
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[') {
            current = h.trim_start_matches('[').trim_end_matches(']').trim().to_string();
            if current == section && header_line.is_none() {
                header_line = Some(i + 1);
            }
            continue;
        }
        let in_section = current == section || current.starts_with(&format!("{section}."));
        if in_section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim().trim_matches('"') == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header_line
}
