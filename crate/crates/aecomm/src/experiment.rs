//! Declarative experiment configs: a set of named models, perturbations,
//! and scenarios swept over Eb/N0 grids, producing one CSV of BLER points.
//!
//! Every scenario gets a deterministic seed derived from the master seed
//! and the scenario id (stable under reordering), unless it pins its own.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::attacks::Perturbation;
use crate::autoencoder::TrainedAutoencoder;
use crate::channel::{perturbation_power, ChannelConfig};
use crate::evaluation::{
    sweep, AttackModel, BlerCurve, Scenario, ShiftPolicy, SystemUnderTest,
};
use crate::util::{fnv1a64, splitmix64};
use crate::{Error, Result};

/// Which system a scenario measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemSelection {
    /// BPSK + Hamming(7,4) + MLD.
    Classical,
    /// A trained model from the config's `models` table.
    Autoencoder { model: String },
    /// Synthetic decoder with a known error probability.
    ErrorStub { error_prob: f64 },
}

/// Which attack a scenario applies.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackSelection {
    #[default]
    None,
    /// Gaussian jamming power-matched to the given PSR.
    Jamming { psr_db: f64 },
    /// A stored perturbation from the config's `perturbations` table.
    Perturbation { id: String },
}

fn default_shift() -> ShiftPolicy {
    ShiftPolicy::None
}

/// One scenario: system x attack x shift policy over an Eb/N0 grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: String,
    pub system: SystemSelection,
    #[serde(default)]
    pub attack: AttackSelection,
    #[serde(default = "default_shift")]
    pub shift_policy: ShiftPolicy,
    pub ebno_grid_db: Vec<f64>,
    pub trials: u64,
    /// Optional explicit seed; derived from the master seed otherwise.
    #[serde(default)]
    pub seed: Option<u64>,
}

/// A full experiment: artifact tables plus the scenario list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    #[serde(default)]
    pub models: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub perturbations: BTreeMap<String, PathBuf>,
    pub scenarios: Vec<ScenarioConfig>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::Config(
                "experiment declares no scenarios".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for sc in &self.scenarios {
            if sc.id.is_empty() {
                return Err(Error::Config("scenario id must be nonempty".into()));
            }
            if !seen.insert(&sc.id) {
                return Err(Error::Config(format!(
                    "duplicate scenario id '{}'",
                    sc.id
                )));
            }
            if sc.trials == 0 {
                return Err(Error::Config(format!(
                    "scenario '{}': trials must be at least 1",
                    sc.id
                )));
            }
            if sc.ebno_grid_db.is_empty() {
                return Err(Error::Config(format!(
                    "scenario '{}': ebno_grid_db must be nonempty",
                    sc.id
                )));
            }
            if sc.ebno_grid_db.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!(
                    "scenario '{}': ebno_grid_db must be finite",
                    sc.id
                )));
            }
            if sc.ebno_grid_db.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::Config(format!(
                    "scenario '{}': ebno_grid_db must be strictly increasing",
                    sc.id
                )));
            }
            if let SystemSelection::Autoencoder { model } = &sc.system {
                if !self.models.contains_key(model) {
                    return Err(Error::Config(format!(
                        "scenario '{}': unknown model id '{model}'",
                        sc.id
                    )));
                }
            }
            if let AttackSelection::Perturbation { id } = &sc.attack {
                if !self.perturbations.contains_key(id) {
                    return Err(Error::Config(format!(
                        "scenario '{}': unknown perturbation id '{id}'",
                        sc.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Seed for a scenario: explicit if pinned, otherwise derived from the
    /// master seed and the scenario id.
    pub fn scenario_seed(&self, sc: &ScenarioConfig) -> u64 {
        sc.seed
            .unwrap_or_else(|| splitmix64(self.master_seed ^ fnv1a64(&sc.id)))
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Runs every scenario in the config. Paths in the artifact tables are
/// resolved relative to `base_dir` (typically the config file's directory).
pub fn run_experiment(config: &ExperimentConfig, base_dir: &Path) -> Result<Vec<BlerCurve>> {
    config.validate()?;

    let mut models: BTreeMap<&str, Arc<TrainedAutoencoder>> = BTreeMap::new();
    for (id, path) in &config.models {
        let full = resolve(base_dir, path);
        let model = TrainedAutoencoder::load(&full).map_err(|e| {
            Error::Config(format!("model '{id}' ({}): {e}", full.display()))
        })?;
        models.insert(id, Arc::new(model));
    }
    let mut perturbations: BTreeMap<&str, Arc<Perturbation>> = BTreeMap::new();
    for (id, path) in &config.perturbations {
        let full = resolve(base_dir, path);
        let pert = Perturbation::load(&full).map_err(|e| {
            Error::Config(format!("perturbation '{id}' ({}): {e}", full.display()))
        })?;
        perturbations.insert(id, Arc::new(pert));
    }

    let mut curves = Vec::with_capacity(config.scenarios.len());
    for sc in &config.scenarios {
        let system = match &sc.system {
            SystemSelection::Classical => SystemUnderTest::classical(),
            SystemSelection::Autoencoder { model } => {
                SystemUnderTest::Autoencoder(models[model.as_str()].clone())
            }
            SystemSelection::ErrorStub { error_prob } => SystemUnderTest::ErrorStub {
                error_prob: *error_prob,
            },
        };
        let (k, n) = match &system {
            SystemUnderTest::Autoencoder(m) => (m.arch.k, m.arch.n),
            _ => (4, 7),
        };
        let channel = ChannelConfig::new(sc.ebno_grid_db[0], k, n)?;
        let (attack, psr_db) = match &sc.attack {
            AttackSelection::None => (AttackModel::None, None),
            AttackSelection::Jamming { psr_db } => (
                AttackModel::Jamming {
                    p_power: perturbation_power(*psr_db, channel.signal_power()),
                },
                Some(*psr_db),
            ),
            AttackSelection::Perturbation { id } => {
                let pert = perturbations[id.as_str()].clone();
                let psr = 10.0 * (pert.p_power / channel.signal_power()).log10();
                (
                    AttackModel::Fixed {
                        label: id.clone(),
                        perturbation: pert,
                    },
                    Some(psr),
                )
            }
        };
        let scenario = Scenario::new(
            sc.id.clone(),
            system,
            attack,
            sc.shift_policy,
            channel,
            psr_db,
            sc.trials,
            config.scenario_seed(sc),
        )?;
        curves.push(sweep(&scenario, &sc.ebno_grid_db)?);
    }
    Ok(curves)
}
