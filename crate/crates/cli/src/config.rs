//! The resolved run configuration written next to every run's outputs.

use std::path::{Path, PathBuf};

use drive_ep::epa::Entity;
use drive_ep::features::Feature;
use drive_ep::gbdt::{default_grid, GbdtParams};
use drive_ep::ingest::IngestConfig;
use drive_ep::model::FitterSpec;
use drive_ep::synth::SynthConfig;
use drive_ep::trainers::TrainerSpec;
use drive_ep::uncertainty::BootstrapScheme;
use drive_ep::{Error, Result, WeightingScheme};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub data: DataConfig,
    pub ingest: IngestConfig,
    pub trainer: TrainerSpec,
    pub bootstrap: BootstrapConfig,
    pub eval: EvalConfig,
    pub catalytic: CatalyticSection,
    pub tune: TuneConfig,
    pub epa: EpaConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: None,
            data: DataConfig::default(),
            ingest: IngestConfig::default(),
            trainer: TrainerSpec::Weighted {
                fitter: FitterSpec::gbdt(GbdtParams::default()),
            },
            bootstrap: BootstrapConfig::default(),
            eval: EvalConfig::default(),
            catalytic: CatalyticSection::default(),
            tune: TuneConfig::default(),
            epa: EpaConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

/// Input files. Which ones a command needs depends on the command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Raw play-by-play file for `ingest`.
    pub input: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Plays to summarize or score with EPA.
    pub plays: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub ensemble: Option<PathBuf>,
    /// When set, `ingest` and `simulate` also write a drive-level
    /// train/test split.
    pub test_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub b: usize,
    pub scheme: BootstrapScheme,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            b: 100,
            scheme: BootstrapScheme::ClusterDrives,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub m_test: usize,
    pub alpha: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { m_test: 50, alpha: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalyticSection {
    pub phi_grid: Vec<f64>,
    pub m_synth: usize,
    pub prior: FitterSpec,
    pub target: FitterSpec,
    pub weighting: WeightingScheme,
    pub drive_shared_outcomes: bool,
}

impl Default for CatalyticSection {
    fn default() -> Self {
        CatalyticSection {
            phi_grid: vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0],
            m_synth: 20_000,
            prior: FitterSpec::spline_mlr(),
            target: FitterSpec::gbdt(GbdtParams::default()),
            weighting: WeightingScheme::InverseDriveLength,
            drive_shared_outcomes: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub grid: Vec<GbdtParams>,
    pub features: Vec<Feature>,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            grid: default_grid(),
            features: Feature::outcome_model_set(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpaConfig {
    pub entity: Entity,
    pub season: Option<i32>,
    pub min_plays: usize,
    pub level: f64,
    pub plot_data: bool,
}

impl Default for EpaConfig {
    fn default() -> Self {
        EpaConfig {
            entity: Entity::Team,
            season: None,
            min_plays: 500,
            level: 0.95,
            plot_data: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(toml::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.bootstrap.b == 0 {
            return bad("bootstrap.b must be at least 1");
        }
        if self.eval.m_test == 0 {
            return bad("eval.m_test must be at least 1");
        }
        if !(self.eval.alpha > 0.0 && self.eval.alpha <= 1.0) {
            return bad("eval.alpha must lie in (0, 1]");
        }
        if self.catalytic.phi_grid.is_empty() {
            return bad("catalytic.phi_grid is empty");
        }
        if let Some(f) = self.data.test_fraction {
            if !(f > 0.0 && f < 1.0) {
                return bad("data.test_fraction must lie in (0, 1)");
            }
        }
        Ok(())
    }
}
