//! The JSON record written next to every run's CSVs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{LatticeConfig, ScenarioConfig, Task};
use super::registry::{Provenance, Scenario};
use super::{Result, RunOptions};

pub const MANIFEST_FILE: &str = "manifest.json";

/// `β` and `β²` of the chain, the guide values drawn on plots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Guides {
    pub beta: Option<f64>,
    pub beta_sq: Option<f64>,
}

impl Guides {
    pub fn of(lattice: &LatticeConfig) -> Self {
        let beta = lattice.beta();
        Self {
            beta,
            beta_sq: beta.map(|b| b * b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub variant: String,
    /// File name relative to the run directory.
    pub path: String,
    pub realization: Option<u64>,
    pub seed: u64,
    pub unstable: bool,
    pub unstable_time: Option<f64>,
    /// RK4 step used, absent for sweeps.
    pub step: Option<f64>,
    pub guides: Guides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Integrator {
    pub method: String,
    pub courant: f64,
    pub output_interval: f64,
    pub guard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub description: String,
    /// `single` or `ensemble`.
    pub mode: String,
    pub tool_version: String,
    pub created: String,
    pub wall_clock_seconds: f64,
    pub config: ScenarioConfig,
    pub overrides: BTreeMap<String, Value>,
    pub provenance: BTreeMap<String, Provenance>,
    pub integrator: Option<Integrator>,
    pub ensemble_size: Option<usize>,
    pub guides: Guides,
    pub outputs: Vec<OutputRecord>,
    pub cli_args: Vec<String>,
    pub directory: String,
}

impl RunManifest {
    #[allow(clippy::too_many_arguments)]
    pub(super) fn new(
        scenario: &Scenario,
        config: ScenarioConfig,
        overrides: &BTreeMap<String, Value>,
        ensemble_size: Option<usize>,
        outputs: Vec<OutputRecord>,
        opts: &RunOptions,
        elapsed: Duration,
        dir: &Path,
    ) -> Self {
        let integrator = match &config.task {
            Task::Trajectory { dt, courant, .. } => Some(Integrator {
                method: "rk4".into(),
                courant: *courant,
                output_interval: *dt,
                guard: crate::dynamics::IntegrateOptions::default().guard,
            }),
            _ => None,
        };
        Self {
            scenario: scenario.id.clone(),
            description: scenario.description.clone(),
            mode: if ensemble_size.is_some() { "ensemble" } else { "single" }.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            created: chrono::Utc::now().to_rfc3339(),
            wall_clock_seconds: elapsed.as_secs_f64(),
            guides: Guides::of(&config.lattice),
            config,
            overrides: overrides.clone(),
            provenance: scenario.provenance.clone(),
            integrator,
            ensemble_size,
            outputs,
            cli_args: opts.cli_args.clone(),
            directory: dir.display().to_string(),
        }
    }

    pub fn any_unstable(&self) -> bool {
        self.outputs.iter().any(|o| o.unstable)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    /// Reads a manifest from its file or from the run directory holding it.
    pub fn read(path: &Path) -> Result<Self> {
        let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        Ok(serde_json::from_str(&fs::read_to_string(file)?)?)
    }
}
