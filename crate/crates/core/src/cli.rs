//! The `skinwave` command line.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 when a run was
//! flagged for unstable growth (outputs are still written), 1 for I/O
//! failures.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::analytics::{self, ResolventParams};
use crate::dynamics::{build_amplitude_generator, build_quadrature_generator, format_sig, spectral_abscissa};
use crate::model::{classify_stability, is_marginal, realize_bkc, realize_indexed, BKCSpec, HNSpec};
use crate::scenarios::{self, parse_value, Range, RunManifest, RunOptions, ScenarioError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_UNSTABLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "skinwave", version, about = "Emitters on non-Hermitian chains: scenarios, sweeps and diagnostics")]
pub struct Cli {
    /// Print progress and summaries to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a registered scenario once.
    Run {
        id: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run disorder realizations of a scenario in parallel.
    Ensemble {
        id: String,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Re-run the configuration recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analytic parameter sweeps, written as CSV.
    Sweep {
        kind: SweepKind,
        #[command(flatten)]
        args: SweepArgs,
    },
    /// Giant-emitter self-energy at one frequency.
    SelfEnergy(SelfEnergyArgs),
    /// Stability class and spectral abscissa of a lattice spec file (JSON).
    Stability { spec: PathBuf },
    /// List registered scenarios.
    List,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Override a configuration field, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output root (default `$SKINWAVE_OUT`, else `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    /// Decoherence-free coupling ratios against κ.
    Dfp,
    /// Effective decay rate against the coupling ratio.
    Decay,
    /// Loss-modified discriminant against κ.
    Discriminant,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Mean hopping J.
    #[arg(long = "J")]
    pub hop_mean: f64,
    /// Hopping imbalance γ.
    #[arg(long)]
    pub gamma: f64,
    /// On-site loss, a value or `start:stop:step`.
    #[arg(long, default_value = "0")]
    pub kappa: String,
    /// Coupling ratio grid `start:stop:step` (decay sweep).
    #[arg(long)]
    pub ratio: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub separation: u32,
    #[arg(long, default_value_t = 0.0)]
    pub detuning: f64,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelfEnergyArgs {
    /// Frequency `re` or `re,im`; evaluated at `z + i0⁺`.
    #[arg(long, allow_hyphen_values = true)]
    pub z: String,
    #[arg(long = "J")]
    pub hop_mean: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub g0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gn: f64,
    #[arg(long, default_value_t = 2)]
    pub separation: u32,
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Io(String),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io(_) | ScenarioError::Csv(_) => Failure::Io(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<analytics::AnalyticsError> for Failure {
    fn from(e: analytics::AnalyticsError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Parses `key=value` overrides.
pub fn parse_overrides(pairs: &[String]) -> Result<BTreeMap<String, Value>, String> {
    pairs
        .iter()
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| format!("override {p:?} is not key=value"))?;
            Ok((k.trim().to_string(), parse_value(v.trim())))
        })
        .collect()
}

fn parse_complex(text: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = text.split(',').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad number {s:?} in --z"));
    match parts[..] {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("--z expects re or re,im, got {text:?}")),
    }
}

fn parse_grid(text: &str, name: &str) -> Result<Vec<f64>, String> {
    if let Ok(v) = text.trim().parse::<f64>() {
        return Ok(vec![v]);
    }
    Range::parse(text)
        .ok_or_else(|| format!("--{name} expects a number or start:stop:step"))?
        .points()
        .map_err(|e| e.to_string())
}

/// Entry point; returns the process exit code.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let recorded: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(&cli, recorded, stdout) {
        Ok(code) => code,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            EXIT_IO
        }
    }
}

fn dispatch(cli: &Cli, recorded: Vec<String>, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let verbose = cli.verbose > 0;
    match &cli.command {
        Command::Run { id, output } => {
            let overrides = parse_overrides(&output.set).map_err(Failure::Invalid)?;
            let opts = RunOptions {
                out_root: output.out.clone(),
                cli_args: recorded,
            };
            let manifest = scenarios::run_scenario(id, &overrides, &opts)?;
            Ok(report(&manifest, verbose, stdout)?)
        }
        Command::Ensemble { id, n, output } => {
            let overrides = parse_overrides(&output.set).map_err(Failure::Invalid)?;
            let opts = RunOptions {
                out_root: output.out.clone(),
                cli_args: recorded,
            };
            let (manifest, _) = scenarios::run_ensemble(id, *n, &overrides, &opts)?;
            Ok(report(&manifest, verbose, stdout)?)
        }
        Command::Replay { manifest, out } => {
            let m = scenarios::replay(manifest, out.as_deref())?;
            Ok(report(&m, verbose, stdout)?)
        }
        Command::Sweep { kind, args } => sweep(*kind, args, stdout),
        Command::SelfEnergy(args) => self_energy(args, stdout),
        Command::Stability { spec } => stability(spec, stdout),
        Command::List => {
            for s in scenarios::registry() {
                writeln!(stdout, "{:<6}  {}", s.id, s.description)?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn report(m: &RunManifest, verbose: bool, stdout: &mut dyn Write) -> std::io::Result<i32> {
    writeln!(stdout, "{}", m.directory)?;
    if verbose {
        eprintln!(
            "{} ({}): {} output(s) in {:.2} s",
            m.scenario,
            m.mode,
            m.outputs.len(),
            m.wall_clock_seconds
        );
        for o in &m.outputs {
            match o.unstable_time {
                Some(t) => eprintln!("  {}: unstable growth at t = {t}", o.path),
                None => eprintln!("  {}", o.path),
            }
        }
    }
    if m.any_unstable() {
        eprintln!("unstable growth flagged in {} output(s)", m.outputs.iter().filter(|o| o.unstable).count());
        Ok(EXIT_UNSTABLE)
    } else {
        Ok(EXIT_OK)
    }
}

fn sweep(kind: SweepKind, args: &SweepArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let spec = HNSpec::clean(scenarios::NUM_SITES, args.hop_mean, args.gamma);
    let (jr, jl) = (spec.right_hop(), spec.left_hop());
    let kappas = parse_grid(&args.kappa, "kappa").map_err(Failure::Invalid)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let header: Vec<&str> = match kind {
        SweepKind::Discriminant => {
            for k in kappas {
                rows.push(vec![format_sig(k), format_sig(analytics::discriminant(k, jr, jl)?)]);
            }
            vec!["kappa", "discriminant"]
        }
        SweepKind::Decay => {
            let ratio = args
                .ratio
                .as_deref()
                .ok_or_else(|| Failure::Invalid("decay sweep needs --ratio start:stop:step".into()))?;
            let ratios = parse_grid(ratio, "ratio").map_err(Failure::Invalid)?;
            let multi = kappas.len() > 1;
            for &k in &kappas {
                for &r in &ratios {
                    let p = ResolventParams::new(args.detuning.into(), jr, jl, 1.0, r, args.separation).with_loss(k);
                    let mut row = vec![format_sig(r), format_sig(analytics::effective_decay(&p)?)];
                    if multi {
                        row.insert(0, format_sig(k));
                    }
                    rows.push(row);
                }
            }
            if multi {
                vec!["kappa", "r", "effective_decay"]
            } else {
                vec!["r", "effective_decay"]
            }
        }
        SweepKind::Dfp => {
            for k in kappas {
                let roots = analytics::dfp_roots(args.separation, args.detuning, k, jr, jl)?;
                for (idx, r) in roots.into_iter().enumerate() {
                    rows.push(vec![format_sig(k), idx.to_string(), format_sig(r)]);
                }
            }
            vec!["kappa", "root_index", "r"]
        }
    };
    let sink: Box<dyn Write + '_> = match &args.out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(&mut *stdout),
    };
    let mut w = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(&header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn self_energy(args: &SelfEnergyArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let z = parse_complex(&args.z).map_err(Failure::Invalid)?;
    let spec = HNSpec::clean(scenarios::NUM_SITES, args.hop_mean, args.gamma);
    let p = ResolventParams::new(z, spec.right_hop(), spec.left_hop(), args.g0, args.gn, args.separation)
        .with_loss(args.kappa);
    let sigma = analytics::self_energy_giant(&p)?;
    let out = json!({
        "z": [z.re, z.im],
        "self_energy": [sigma.re, sigma.im],
        "decay_rate": analytics::decay_rate(&p)?,
        "effective_decay": analytics::effective_decay(&p)?,
    });
    writeln!(stdout, "{}", serde_json::to_string_pretty(&out).expect("json"))?;
    Ok(EXIT_OK)
}

fn stability(path: &Path, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let text = std::fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let invalid = |e: &dyn std::fmt::Display| Failure::Invalid(e.to_string());
    // A spec file holds either record; the HN one is tried first.
    let (summary, abscissa, scale) = if let Ok(spec) = serde_json::from_value::<HNSpec>(value.clone()) {
        let lattice = realize_indexed(&spec, 0).map_err(|e| invalid(&e))?;
        let gen = build_amplitude_generator(&lattice, &[]).map_err(|e| invalid(&e))?;
        let a = spectral_abscissa(&gen).map_err(|e| invalid(&e))?;
        let class = serde_json::to_value(classify_stability(&spec)).expect("json");
        (
            json!({"lattice": "hn", "class": class, "marginal": is_marginal(&spec), "beta": spec.beta()}),
            a,
            gen.row_sum_norm(),
        )
    } else {
        let spec: BKCSpec = serde_json::from_value(value).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
        let chain = realize_bkc(&spec, 0).map_err(|e| invalid(&e))?;
        let gen = build_quadrature_generator(&chain, &[]).map_err(|e| invalid(&e))?;
        let a = spectral_abscissa(&gen).map_err(|e| invalid(&e))?;
        (json!({"lattice": "bkc"}), a, gen.row_sum_norm())
    };
    let growing = abscissa > 1e-9 * scale.max(1.0);
    let mut out = summary;
    out["spectral_abscissa"] = json!(abscissa);
    out["growing"] = json!(growing);
    writeln!(stdout, "{}", serde_json::to_string_pretty(&out).expect("json"))?;
    Ok(if growing { EXIT_UNSTABLE } else { EXIT_OK })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let code = run(std::iter::once("skinwave").chain(args.iter().copied()), &mut out);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn overrides_parse() {
        let o = parse_overrides(&["hop_mean=3".into(), "c.detuning = -2".into()]).unwrap();
        assert_eq!(o["hop_mean"], json!(3));
        assert_eq!(o["c.detuning"], json!(-2));
        assert!(parse_overrides(&["nokey".into()]).is_err());
    }

    #[test]
    fn complex_argument() {
        assert_eq!(parse_complex("1.5").unwrap(), Complex64::new(1.5, 0.0));
        assert_eq!(parse_complex("-1,2").unwrap(), Complex64::new(-1.0, 2.0));
        assert!(parse_complex("a").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(call(&["--bogus"]).0, EXIT_INVALID);
        assert_eq!(call(&["sweep", "nope", "--J", "1", "--gamma", "0"]).0, EXIT_INVALID);
        assert_eq!(call(&["sweep", "decay", "--J", "10", "--gamma", "5"]).0, EXIT_INVALID);
        assert_eq!(call(&["run", "fig99"]).0, EXIT_INVALID);
    }

    #[test]
    fn list_names_every_scenario() {
        let (code, out) = call(&["list"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.lines().count(), scenarios::scenario_ids().len());
    }

    #[test]
    fn dfp_sweep_rows() {
        let (code, out) = call(&["sweep", "dfp", "--J", "10", "--gamma", "5"]);
        assert_eq!(code, EXIT_OK);
        let rows: Vec<&str> = out.lines().collect();
        assert_eq!(rows[0], "kappa,root_index,r");
        assert_eq!(rows.len(), 3);
    }

    #[test]
    fn self_energy_json() {
        let (code, out) = call(&["self-energy", "--z", "0", "--J", "10", "--gamma", "5", "--gn", "1"]);
        assert_eq!(code, EXIT_OK);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!((v["effective_decay"].as_f64().unwrap() + 4.0 / 3.0).abs() < 1e-6);
    }
}
