//! Scenario configuration records and key-path overrides.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{BKCSpec, EmitterSpec, HNSpec};

use super::ScenarioError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeConfig {
    Hn(HNSpec),
    Bkc(BKCSpec),
}

impl LatticeConfig {
    pub fn num_sites(&self) -> usize {
        match self {
            LatticeConfig::Hn(s) => s.num_sites,
            LatticeConfig::Bkc(s) => s.num_sites,
        }
    }

    /// `β` of the (effective) Hatano–Nelson chain: `sqrt(J_R/J_L)`, or
    /// `sqrt((J+λ)/(J−λ))` for the position-quadrature chain of a BKC.
    pub fn beta(&self) -> Option<f64> {
        let (r, l) = match self {
            LatticeConfig::Hn(s) => (s.right_hop(), s.left_hop()),
            LatticeConfig::Bkc(s) => (s.hop_amp + s.pairing, s.hop_amp - s.pairing),
        };
        (r * l > 0.0).then(|| (r / l).sqrt())
    }

    pub fn has_disorder(&self) -> bool {
        match self {
            LatticeConfig::Hn(s) => s.hop_disorder_bound > 0.0 || s.onsite_disorder_bound > 0.0,
            LatticeConfig::Bkc(s) => s.onsite_disorder_bound > 0.0,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            LatticeConfig::Hn(s) => s.seed,
            LatticeConfig::Bkc(s) => s.seed,
        }
    }
}

/// Inclusive `start:stop:step` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn parse(text: &str) -> Option<Self> {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse().ok())
            .collect::<Option<_>>()?;
        match parts[..] {
            [start, stop, step] => Some(Self { start, stop, step }),
            _ => None,
        }
    }

    pub fn points(&self) -> Result<Vec<f64>, ScenarioError> {
        let ok = self.step > 0.0 && self.stop >= self.start && self.start.is_finite() && self.stop.is_finite();
        if !ok {
            return Err(ScenarioError::InvalidOverride(format!(
                "range {}:{}:{} is empty or malformed",
                self.start, self.stop, self.step
            )));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|k| self.start + k as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Time evolution from `initial` (mode label → real amplitude).
    Trajectory {
        t_end: f64,
        dt: f64,
        courant: f64,
        initial: BTreeMap<String, f64>,
    },
    /// `effective_decay` against the coupling ratio `g_N/g0`; loss comes from
    /// the lattice.
    DecaySweep {
        ratio: Range,
        separation: u32,
        detuning: f64,
    },
    /// Loss-modified discriminant against `κ`.
    DiscriminantSweep { kappa: Range },
}

/// One curve of a scenario: a label and overrides applied on top of the
/// base configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub label: String,
    #[serde(default)]
    pub set: BTreeMap<String, Value>,
}

impl Variant {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            set: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.set.insert(key.to_string(), value.into());
        self
    }
}

/// Fully resolved parameters of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub lattice: LatticeConfig,
    /// Coupling sites are relative; runs centre them on the chain.
    pub emitters: Vec<EmitterSpec>,
    pub task: Task,
    pub variants: Vec<Variant>,
}

impl ScenarioConfig {
    /// The configuration of one variant.
    pub fn resolve_variant(&self, variant: &Variant) -> Result<ScenarioConfig, ScenarioError> {
        let mut cfg = self.clone();
        cfg.variants = Vec::new();
        apply_overrides(&cfg, &variant.set)
    }

    /// Shift that centres the coupling region on site `num_sites / 2`.
    pub fn emitter_offset(&self) -> usize {
        let sites: Vec<usize> = self.emitters.iter().flat_map(|e| e.sites()).collect();
        let (lo, hi) = match (sites.iter().min(), sites.iter().max()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return 0,
        };
        (self.lattice.num_sites() / 2).saturating_sub((lo + hi) / 2)
    }

    pub fn placed_emitters(&self) -> Vec<EmitterSpec> {
        let offset = self.emitter_offset();
        self.emitters.iter().map(|e| e.shifted(offset)).collect()
    }
}

/// Parses an override value: JSON, then `start:stop:step`, then a comma list,
/// then a bare string.
pub fn parse_value(text: &str) -> Value {
    if let Ok(v) = serde_json::from_str::<Value>(text) {
        return v;
    }
    if let Some(r) = Range::parse(text) {
        return serde_json::to_value(r).expect("range serialises");
    }
    if text.contains(',') {
        return Value::Array(text.split(',').map(|p| parse_value(p.trim())).collect());
    }
    Value::String(text.to_string())
}

/// Applies `key = value` overrides to a configuration.
///
/// Keys are dot-separated paths into the JSON form of the configuration.
/// A leading emitter name stands for `emitters.<index>`, and a single
/// segment may name any field that occurs exactly once outside arrays.
pub fn apply_overrides(
    cfg: &ScenarioConfig,
    overrides: &BTreeMap<String, Value>,
) -> Result<ScenarioConfig, ScenarioError> {
    if overrides.is_empty() {
        return Ok(cfg.clone());
    }
    let mut root = serde_json::to_value(cfg).expect("config serialises");
    for (key, value) in overrides {
        let path = resolve_path(&root, cfg, key)?;
        let slot = path
            .iter()
            .try_fold(&mut root, |node, seg| match node {
                Value::Object(map) => map.get_mut(seg),
                Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
                _ => None,
            })
            .ok_or_else(|| ScenarioError::InvalidOverride(format!("unknown field {key}")))?;
        *slot = value.clone();
    }
    serde_json::from_value(root).map_err(|e| ScenarioError::InvalidOverride(e.to_string()))
}

fn resolve_path(root: &Value, cfg: &ScenarioConfig, key: &str) -> Result<Vec<String>, ScenarioError> {
    let mut segs: Vec<String> = key.split('.').map(str::to_string).collect();
    if let Some(idx) = cfg.emitters.iter().position(|e| e.name == segs[0]) {
        segs.splice(0..1, ["emitters".to_string(), idx.to_string()]);
    }
    if lookup(root, &segs).is_some() {
        return Ok(segs);
    }
    if segs.len() == 1 {
        let mut found = Vec::new();
        find_leaf(root, &segs[0], &mut Vec::new(), &mut found);
        return match found.len() {
            1 => Ok(found.pop().unwrap()),
            0 => Err(ScenarioError::InvalidOverride(format!("unknown field {key}"))),
            _ => Err(ScenarioError::InvalidOverride(format!(
                "field {key} is ambiguous; use a full path"
            ))),
        };
    }
    Err(ScenarioError::InvalidOverride(format!("unknown field {key}")))
}

fn lookup<'a>(root: &'a Value, path: &[String]) -> Option<&'a Value> {
    path.iter().try_fold(root, |node, seg| match node {
        Value::Object(map) => map.get(seg),
        Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get(i)),
        _ => None,
    })
}

fn find_leaf(node: &Value, name: &str, prefix: &mut Vec<String>, found: &mut Vec<Vec<String>>) {
    if let Value::Object(map) = node {
        for (k, v) in map {
            prefix.push(k.clone());
            if k == name {
                found.push(prefix.clone());
            }
            find_leaf(v, name, prefix, found);
            prefix.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScenarioConfig {
        ScenarioConfig {
            lattice: LatticeConfig::Hn(HNSpec::clean(800, 10.0, 5.0)),
            emitters: vec![EmitterSpec::giant("c", 0.0, (0, 1.0), (2, 0.5)).unwrap()],
            task: Task::Trajectory {
                t_end: 10.0,
                dt: 0.5,
                courant: 0.05,
                initial: [("c".to_string(), 1.0)].into(),
            },
            variants: vec![],
        }
    }

    #[test]
    fn range_points() {
        let r = Range::parse("0:5:0.05").unwrap();
        let pts = r.points().unwrap();
        assert_eq!(pts.len(), 101);
        assert!((pts[100] - 5.0).abs() < 1e-12);
        assert!(Range::parse("1:2").is_none());
        assert!(Range::new(1.0, 0.0, 0.1).points().is_err());
    }

    #[test]
    fn value_parsing() {
        assert_eq!(parse_value("2.5"), Value::from(2.5));
        assert_eq!(parse_value("[1,2]"), serde_json::json!([1, 2]));
        assert_eq!(
            parse_value("0:1:0.5"),
            serde_json::json!({"start": 0.0, "stop": 1.0, "step": 0.5})
        );
        assert_eq!(parse_value("1,2"), serde_json::json!([1, 2]));
        assert_eq!(parse_value("open"), Value::from("open"));
    }

    #[test]
    fn overrides_by_leaf_path_and_emitter() {
        let cfg = sample();
        let mut ov = BTreeMap::new();
        ov.insert("hop_imbalance".to_string(), Value::from(2.0));
        ov.insert("c.detuning".to_string(), Value::from(3.0));
        ov.insert("task.trajectory.t_end".to_string(), Value::from(20.0));
        let out = apply_overrides(&cfg, &ov).unwrap();
        match &out.lattice {
            LatticeConfig::Hn(s) => assert_eq!(s.hop_imbalance, 2.0),
            _ => unreachable!(),
        }
        assert_eq!(out.emitters[0].detuning, 3.0);
        assert!(matches!(out.task, Task::Trajectory { t_end, .. } if t_end == 20.0));
    }

    #[test]
    fn rejects_unknown_and_mistyped() {
        let cfg = sample();
        let bad = |k: &str, v: Value| apply_overrides(&cfg, &[(k.to_string(), v)].into());
        assert!(bad("nonsense", Value::from(1)).is_err());
        assert!(bad("hop_mean", Value::from("ten")).is_err());
        assert!(bad("lattice.hn.missing", Value::from(1)).is_err());
    }

    #[test]
    fn emitters_are_centred() {
        let cfg = sample();
        assert_eq!(cfg.emitter_offset(), 399);
        let placed = cfg.placed_emitters();
        assert_eq!(placed[0].sites().collect::<Vec<_>>(), vec![399, 401]);
    }
}
