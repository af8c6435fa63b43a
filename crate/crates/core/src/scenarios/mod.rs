//! Named figure-scale experiments: resolution of parameters, simulation or
//! sweep evaluation, and CSV + JSON manifest output.

mod config;
mod manifest;
mod registry;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::Value;
use thiserror::Error;

use crate::analytics::{self, AnalyticsError, ResolventParams};
use crate::dynamics::{
    build_amplitude_generator, build_quadrature_generator, integrate, Amplitude, DynamicsError,
    Generator, IntegrateOptions, Trajectory,
};
use crate::model::{realize_bkc, realize_indexed, ModelError};

pub use config::{apply_overrides, parse_value, LatticeConfig, Range, ScenarioConfig, Task, Variant};
pub use manifest::{Guides, Integrator, OutputRecord, RunManifest, MANIFEST_FILE};
pub use registry::{fig8_matched_ratio, lookup, registry, scenario_ids, Provenance, Scenario, FIG8_LOSS, NUM_SITES};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "SKINWAVE_OUT";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0}")]
    UnknownScenario(String),
    #[error("invalid override: {0}")]
    InvalidOverride(String),
    #[error("ensemble size must be at least 1, got {0}")]
    EnsembleSize(usize),
    #[error("scenario {0} has no disorder; an ensemble would repeat one realization")]
    NoDisorder(String),
    #[error("initial condition names unknown mode {0}")]
    UnknownMode(String),
    #[error("{0} requires a Hatano–Nelson lattice")]
    NeedsHatanoNelson(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

/// In-memory result of one variant.
#[derive(Debug, Clone)]
pub enum VariantData {
    Amplitude(Trajectory<Complex64>),
    Quadrature(Trajectory<f64>),
    Sweep { header: [String; 2], rows: Vec<(f64, f64)> },
}

impl VariantData {
    pub fn is_unstable(&self) -> bool {
        match self {
            VariantData::Amplitude(t) => t.is_unstable(),
            VariantData::Quadrature(t) => t.is_unstable(),
            VariantData::Sweep { .. } => false,
        }
    }

    pub fn amplitude(&self) -> Option<&Trajectory<Complex64>> {
        match self {
            VariantData::Amplitude(t) => Some(t),
            _ => None,
        }
    }

    pub fn quadrature(&self) -> Option<&Trajectory<f64>> {
        match self {
            VariantData::Quadrature(t) => Some(t),
            _ => None,
        }
    }

    pub fn sweep(&self) -> Option<&[(f64, f64)]> {
        match self {
            VariantData::Sweep { rows, .. } => Some(rows),
            _ => None,
        }
    }
}

/// Resolved configuration of a registered scenario with overrides applied.
pub fn resolve(id: &str, overrides: &BTreeMap<String, Value>) -> Result<(Scenario, ScenarioConfig)> {
    let scenario = lookup(id).ok_or_else(|| ScenarioError::UnknownScenario(id.to_string()))?;
    let cfg = apply_overrides(&scenario.config, overrides)?;
    Ok((scenario, cfg))
}

/// The variants to evaluate: the configured ones, or the base configuration
/// alone.
pub fn variants_of(cfg: &ScenarioConfig) -> Vec<Variant> {
    if cfg.variants.is_empty() {
        vec![Variant::new("base")]
    } else {
        cfg.variants.clone()
    }
}

fn time_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_end > 0.0 && dt > 0.0 && t_end.is_finite()) {
        return Err(ScenarioError::InvalidOverride(format!("time grid t_end = {t_end}, dt = {dt}")));
    }
    let n = (t_end / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}

fn initial_vector<T: Amplitude>(
    gen: &Generator<T>,
    initial: &BTreeMap<String, f64>,
    lift: impl Fn(f64) -> T,
) -> Result<Vec<T>> {
    let mut v = vec![T::default(); gen.dimension()];
    for (label, &amp) in initial {
        let k = gen
            .index_of(label)
            .ok_or_else(|| ScenarioError::UnknownMode(label.clone()))?;
        v[k] = lift(amp);
    }
    Ok(v)
}

/// Evaluates a fully resolved (single-variant) configuration for disorder
/// realization `realization`.
pub fn simulate(cfg: &ScenarioConfig, realization: u64) -> Result<VariantData> {
    match &cfg.task {
        Task::Trajectory {
            t_end,
            dt,
            courant,
            initial,
        } => {
            let times = time_grid(*t_end, *dt)?;
            let opts = IntegrateOptions {
                courant: *courant,
                ..Default::default()
            };
            let emitters = cfg.placed_emitters();
            match &cfg.lattice {
                LatticeConfig::Hn(spec) => {
                    let lattice = realize_indexed(spec, realization)?;
                    let gen = build_amplitude_generator(&lattice, &emitters)?;
                    let init = initial_vector(&gen, initial, |a| Complex64::new(a, 0.0))?;
                    Ok(VariantData::Amplitude(integrate(&gen, &init, &times, &opts)?))
                }
                LatticeConfig::Bkc(spec) => {
                    let chain = realize_bkc(spec, realization)?;
                    let gen = build_quadrature_generator(&chain, &emitters)?;
                    let init = initial_vector(&gen, initial, |a| a)?;
                    Ok(VariantData::Quadrature(integrate(&gen, &init, &times, &opts)?))
                }
            }
        }
        Task::DecaySweep {
            ratio,
            separation,
            detuning,
        } => {
            let LatticeConfig::Hn(spec) = &cfg.lattice else {
                return Err(ScenarioError::NeedsHatanoNelson("decay sweep"));
            };
            let rows = ratio
                .points()?
                .into_iter()
                .map(|r| {
                    let p = ResolventParams::new(
                        Complex64::new(*detuning, 0.0),
                        spec.right_hop(),
                        spec.left_hop(),
                        1.0,
                        r,
                        *separation,
                    )
                    .with_loss(spec.onsite_loss);
                    Ok((r, analytics::effective_decay(&p)?))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(VariantData::Sweep {
                header: ["r".into(), "effective_decay".into()],
                rows,
            })
        }
        Task::DiscriminantSweep { kappa } => {
            let LatticeConfig::Hn(spec) = &cfg.lattice else {
                return Err(ScenarioError::NeedsHatanoNelson("discriminant sweep"));
            };
            let rows = kappa
                .points()?
                .into_iter()
                .map(|k| Ok((k, analytics::discriminant(k, spec.right_hop(), spec.left_hop())?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(VariantData::Sweep {
                header: ["kappa".into(), "discriminant".into()],
                rows,
            })
        }
    }
}

/// Writes a variant result to `path`. Trajectories keep the emitter modes
/// (or every mode when there are none).
pub fn write_data(data: &VariantData, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    match data {
        VariantData::Amplitude(t) => {
            let cols = recorded_columns(&t.labels);
            t.write_csv(file, &cols)?;
        }
        VariantData::Quadrature(t) => {
            let cols = recorded_columns(&t.labels);
            t.write_csv(file, &cols)?;
        }
        VariantData::Sweep { header, rows } => {
            let mut w = csv::Writer::from_writer(file);
            w.write_record(header)?;
            for (a, b) in rows {
                w.write_record([crate::dynamics::format_sig(*a), crate::dynamics::format_sig(*b)])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn is_lattice_label(label: &str) -> bool {
    let mut chars = label.chars();
    matches!(chars.next(), Some('a' | 'x' | 'p')) && chars.as_str().parse::<usize>().is_ok()
}

fn recorded_columns(labels: &[String]) -> Vec<usize> {
    let emitters: Vec<usize> = (0..labels.len()).filter(|&k| !is_lattice_label(&labels[k])).collect();
    if emitters.is_empty() {
        (0..labels.len()).collect()
    } else {
        emitters
    }
}

fn default_out_root() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run_dir(root: Option<&Path>, id: &str) -> Result<PathBuf> {
    let root = root.map(Path::to_path_buf).unwrap_or_else(default_out_root);
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
    let base = root.join(id);
    let mut dir = base.join(&stamp);
    let mut k = 1;
    while dir.exists() {
        dir = base.join(format!("{stamp}-{k}"));
        k += 1;
    }
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn step_of(data: &VariantData) -> Option<f64> {
    match data {
        VariantData::Amplitude(t) => Some(t.step),
        VariantData::Quadrature(t) => Some(t.step),
        VariantData::Sweep { .. } => None,
    }
}

fn unstable_time(data: &VariantData) -> Option<f64> {
    use crate::dynamics::TrajectoryStatus::UnstableGrowth;
    let status = match data {
        VariantData::Amplitude(t) => t.status,
        VariantData::Quadrature(t) => t.status,
        VariantData::Sweep { .. } => return None,
    };
    match status {
        UnstableGrowth { time } => Some(time),
        _ => None,
    }
}

fn record(
    dir: &Path,
    file: String,
    variant: &str,
    cfg: &ScenarioConfig,
    realization: Option<u64>,
    data: &VariantData,
) -> Result<OutputRecord> {
    write_data(data, &dir.join(&file))?;
    Ok(OutputRecord {
        variant: variant.to_string(),
        path: file,
        realization,
        seed: cfg.lattice.seed(),
        unstable: data.is_unstable(),
        unstable_time: unstable_time(data),
        step: step_of(data),
        guides: Guides::of(&cfg.lattice),
    })
}

/// Options shared by [`run_scenario`] and [`run_ensemble`].
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output root; defaults to `$SKINWAVE_OUT` or `out`.
    pub out_root: Option<PathBuf>,
    /// Command line recorded in the manifest.
    pub cli_args: Vec<String>,
}

/// Runs every variant of scenario `id` once (realization 0) and writes CSVs
/// and `manifest.json` under `<out>/<id>/<timestamp>/`.
pub fn run_scenario(id: &str, overrides: &BTreeMap<String, Value>, opts: &RunOptions) -> Result<RunManifest> {
    let (scenario, cfg) = resolve(id, overrides)?;
    let start = Instant::now();
    let variants = variants_of(&cfg);
    let resolved = variants
        .iter()
        .map(|v| cfg.resolve_variant(v))
        .collect::<Result<Vec<_>>>()?;
    let results = resolved
        .par_iter()
        .map(|c| simulate(c, 0))
        .collect::<Vec<_>>();
    let dir = run_dir(opts.out_root.as_deref(), id)?;
    let mut outputs = Vec::new();
    for ((v, c), data) in variants.iter().zip(&resolved).zip(results) {
        let data = data?;
        outputs.push(record(&dir, format!("{}.csv", v.label), &v.label, c, Some(0), &data)?);
    }
    let manifest = RunManifest::new(&scenario, cfg, overrides, None, outputs, opts, start.elapsed(), &dir);
    manifest.write(&dir)?;
    Ok(manifest)
}

/// Pointwise statistics of emitter occupations across realizations.
fn write_stats(path: &Path, runs: &[VariantData]) -> Result<()> {
    let occupations: Vec<OccupationTable> = runs
        .iter()
        .filter_map(|d| match d {
            VariantData::Amplitude(t) => Some(occupation_table(t)),
            VariantData::Quadrature(t) => Some(occupation_table(t)),
            VariantData::Sweep { .. } => None,
        })
        .collect();
    let Some((labels, times, _)) = occupations.iter().max_by_key(|o| o.1.len()) else {
        return Ok(());
    };
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["time".to_string(), "count".to_string()];
    for l in labels {
        header.extend(["mean", "min", "max"].map(|s| format!("{l}_occ_{s}")));
    }
    w.write_record(&header)?;
    use crate::dynamics::format_sig;
    for (r, t) in times.iter().enumerate() {
        let alive: Vec<&Vec<Vec<f64>>> = occupations.iter().filter(|o| o.1.len() > r).map(|o| &o.2).collect();
        let mut rec = vec![format_sig(*t), alive.len().to_string()];
        for c in 0..labels.len() {
            let vals: Vec<f64> = alive.iter().map(|rows| rows[r][c]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            rec.extend([mean, min, max].map(format_sig));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Recorded labels, sample times and per-row occupations.
type OccupationTable = (Vec<String>, Vec<f64>, Vec<Vec<f64>>);

fn occupation_table<T: Amplitude>(t: &Trajectory<T>) -> OccupationTable {
    let cols = recorded_columns(&t.labels);
    let labels = cols.iter().map(|&c| t.labels[c].clone()).collect();
    let rows = t
        .values
        .iter()
        .map(|row| cols.iter().map(|&c| row[c].norm_sqr()).collect())
        .collect();
    (labels, t.times.clone(), rows)
}

/// Result of one ensemble variant, kept in memory for analysis.
#[derive(Debug, Clone)]
pub struct EnsembleVariant {
    pub label: String,
    pub disordered: bool,
    pub runs: Vec<VariantData>,
}

/// Runs `n` disorder realizations of every disordered variant of `id`
/// (variants without disorder run once as references), in parallel. Writes
/// per-realization CSVs, `<variant>_stats.csv` with pointwise mean/min/max
/// occupations, and the manifest.
pub fn run_ensemble(
    id: &str,
    n: usize,
    overrides: &BTreeMap<String, Value>,
    opts: &RunOptions,
) -> Result<(RunManifest, Vec<EnsembleVariant>)> {
    if n < 1 {
        return Err(ScenarioError::EnsembleSize(n));
    }
    let (scenario, cfg) = resolve(id, overrides)?;
    let start = Instant::now();
    let variants = variants_of(&cfg);
    let resolved = variants
        .iter()
        .map(|v| cfg.resolve_variant(v))
        .collect::<Result<Vec<_>>>()?;
    if !resolved.iter().any(|c| c.lattice.has_disorder()) {
        return Err(ScenarioError::NoDisorder(id.to_string()));
    }
    let jobs: Vec<(usize, u64)> = resolved
        .iter()
        .enumerate()
        .flat_map(|(k, c)| {
            let count = if c.lattice.has_disorder() { n as u64 } else { 1 };
            (0..count).map(move |r| (k, r))
        })
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(k, r)| simulate(&resolved[k], r))
        .collect::<Vec<_>>();
    let dir = run_dir(opts.out_root.as_deref(), id)?;
    let mut outputs = Vec::new();
    let mut grouped: Vec<EnsembleVariant> = variants
        .iter()
        .zip(&resolved)
        .map(|(v, c)| EnsembleVariant {
            label: v.label.clone(),
            disordered: c.lattice.has_disorder(),
            runs: Vec::new(),
        })
        .collect();
    for (&(k, r), data) in jobs.iter().zip(results) {
        let data = data?;
        let label = &variants[k].label;
        let file = if grouped[k].disordered {
            format!("{label}_r{r:03}.csv")
        } else {
            format!("{label}.csv")
        };
        outputs.push(record(&dir, file, label, &resolved[k], Some(r), &data)?);
        grouped[k].runs.push(data);
    }
    for g in grouped.iter().filter(|g| g.disordered) {
        let file = format!("{}_stats.csv", g.label);
        write_stats(&dir.join(&file), &g.runs)?;
    }
    let manifest = RunManifest::new(&scenario, cfg, overrides, Some(n), outputs, opts, start.elapsed(), &dir);
    manifest.write(&dir)?;
    Ok((manifest, grouped))
}

/// Re-executes a manifest's configuration into a fresh run directory.
pub fn replay(manifest_path: &Path, out_root: Option<&Path>) -> Result<RunManifest> {
    let old = RunManifest::read(manifest_path)?;
    let opts = RunOptions {
        out_root: out_root.map(Path::to_path_buf),
        cli_args: old.cli_args.clone(),
    };
    // The stored configuration already includes the overrides, so it is
    // replayed as an override of the whole record.
    let whole: BTreeMap<String, Value> = [
        ("lattice".to_string(), serde_json::to_value(&old.config.lattice)?),
        ("emitters".to_string(), serde_json::to_value(&old.config.emitters)?),
        ("task".to_string(), serde_json::to_value(&old.config.task)?),
        ("variants".to_string(), serde_json::to_value(&old.config.variants)?),
    ]
    .into();
    match old.ensemble_size {
        Some(n) => Ok(run_ensemble(&old.scenario, n, &whole, &opts)?.0),
        None => run_scenario(&old.scenario, &whole, &opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_covers_every_panel() {
        let ids = scenario_ids();
        let expected = [
            "fig2a", "fig2b", "fig3", "fig4a", "fig4b", "fig4c", "fig5b", "fig5c", "fig6a", "fig6b",
            "fig6c", "fig7a", "fig7b", "fig7c", "fig7d", "fig8a", "fig8b", "fig8c", "fig8d",
        ];
        assert_eq!(ids, expected);
    }

    #[test]
    fn every_variant_resolves() {
        for s in registry() {
            for v in variants_of(&s.config) {
                let cfg = s.config.resolve_variant(&v).unwrap_or_else(|e| panic!("{} {}: {e}", s.id, v.label));
                assert_eq!(cfg.lattice.num_sites(), NUM_SITES, "{}", s.id);
            }
        }
    }

    #[test]
    fn lattice_label_detection() {
        assert!(is_lattice_label("a12"));
        assert!(is_lattice_label("x0"));
        assert!(!is_lattice_label("P_c"));
        assert!(!is_lattice_label("c"));
        assert!(!is_lattice_label("a"));
    }

    #[test]
    fn unknown_scenario() {
        assert!(matches!(
            resolve("fig9", &BTreeMap::new()),
            Err(ScenarioError::UnknownScenario(_))
        ));
    }

    #[test]
    fn sweeps_evaluate() {
        let (_, cfg) = resolve("fig8b", &BTreeMap::new()).unwrap();
        let data = simulate(&cfg, 0).unwrap();
        let rows = data.sweep().unwrap();
        assert_eq!(rows.len(), 101);
        assert!(rows[0].1 > 0.0 && rows[100].1 < 0.0);
    }
}
