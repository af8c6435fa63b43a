//! Lattice and emitter specifications, disorder sampling and stability
//! classification for the Hatano–Nelson chain and the bosonic Kitaev chain.
//!
//! All energies are in units of the reference coupling `g0`.

use std::f64::consts::TAU;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest chain the simulator accepts.
pub const MIN_SITES: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("num_sites must be at least {MIN_SITES}, got {0}")]
    TooFewSites(usize),
    #[error("{field} must be finite and nonnegative, got {value}")]
    Negative { field: &'static str, value: f64 },
    #[error("{field} must be finite, got {value}")]
    NotFinite { field: &'static str, value: f64 },
    #[error("an emitter needs one or two coupling points, got {0}")]
    CouplingCount(usize),
    #[error("coupling sites must be strictly increasing: {0:?}")]
    UnorderedSites(Vec<usize>),
    #[error("beta must be finite and positive, got {0}")]
    InvalidBeta(f64),
    #[error("separation {0} does not satisfy N mod 4 = 2; the matching condition cannot be met")]
    UnmatchableSeparation(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Parameters of a (possibly disordered, lossy) Hatano–Nelson chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HNSpec {
    pub num_sites: usize,
    /// Mean hopping `J`.
    pub hop_mean: f64,
    /// Hopping imbalance `γ`; `J_R = J + γ`, `J_L = J − γ`.
    pub hop_imbalance: f64,
    /// Uniform on-site loss `κ`.
    pub onsite_loss: f64,
    pub boundary: Boundary,
    /// Bound `W_h` of the per-bond deviation of `J_R,j − J_L,j` from `2γ`.
    pub hop_disorder_bound: f64,
    /// Bound `W_p` of the on-site potentials.
    pub onsite_disorder_bound: f64,
    pub seed: u64,
}

impl HNSpec {
    /// A clean open chain with no loss.
    pub fn clean(num_sites: usize, hop_mean: f64, hop_imbalance: f64) -> Self {
        Self {
            num_sites,
            hop_mean,
            hop_imbalance,
            onsite_loss: 0.0,
            boundary: Boundary::Open,
            hop_disorder_bound: 0.0,
            onsite_disorder_bound: 0.0,
            seed: 0,
        }
    }

    pub fn right_hop(&self) -> f64 {
        self.hop_mean + self.hop_imbalance
    }

    pub fn left_hop(&self) -> f64 {
        self.hop_mean - self.hop_imbalance
    }

    /// `sqrt(J_R / J_L)`, defined only for same-sign hoppings.
    pub fn beta(&self) -> Option<f64> {
        let (jr, jl) = (self.right_hop(), self.left_hop());
        (jr * jl > 0.0).then(|| (jr / jl).sqrt())
    }

    pub fn num_bonds(&self) -> usize {
        match self.boundary {
            Boundary::Open => self.num_sites - 1,
            Boundary::Periodic => self.num_sites,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.num_sites < MIN_SITES {
            return Err(ModelError::TooFewSites(self.num_sites));
        }
        finite("hop_mean", self.hop_mean)?;
        finite("hop_imbalance", self.hop_imbalance)?;
        nonnegative("onsite_loss", self.onsite_loss)?;
        nonnegative("hop_disorder_bound", self.hop_disorder_bound)?;
        nonnegative("onsite_disorder_bound", self.onsite_disorder_bound)?;
        Ok(())
    }
}

/// Parameters of a bosonic Kitaev chain (open boundary).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BKCSpec {
    pub num_sites: usize,
    pub hop_amp: f64,
    /// Hopping phase `φ`, kept in `[0, 2π)`.
    pub hop_phase: f64,
    /// Nearest-neighbour pairing strength `λ`.
    pub pairing: f64,
    pub onsite_disorder_bound: f64,
    pub seed: u64,
}

impl BKCSpec {
    pub fn new(num_sites: usize, hop_amp: f64, hop_phase: f64, pairing: f64) -> Self {
        Self {
            num_sites,
            hop_amp,
            hop_phase: hop_phase.rem_euclid(TAU),
            pairing,
            onsite_disorder_bound: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.num_sites < MIN_SITES {
            return Err(ModelError::TooFewSites(self.num_sites));
        }
        finite("hop_amp", self.hop_amp)?;
        finite("hop_phase", self.hop_phase)?;
        finite("pairing", self.pairing)?;
        nonnegative("onsite_disorder_bound", self.onsite_disorder_bound)?;
        Ok(())
    }
}

/// One disorder sample of a Hatano–Nelson chain.
///
/// Bond `j` joins site `j` to site `j + 1` (modulo `num_sites` when periodic);
/// `right_hops[j]` carries amplitude from `j` to `j + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeRealization {
    pub right_hops: Vec<f64>,
    pub left_hops: Vec<f64>,
    pub onsite_potentials: Vec<f64>,
    pub onsite_loss: f64,
    pub boundary: Boundary,
}

impl LatticeRealization {
    pub fn num_sites(&self) -> usize {
        self.onsite_potentials.len()
    }
}

/// One disorder sample of a bosonic Kitaev chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BKCRealization {
    pub hop_amp: f64,
    pub hop_phase: f64,
    pub pairing: f64,
    pub onsite_potentials: Vec<f64>,
}

impl BKCRealization {
    pub fn num_sites(&self) -> usize {
        self.onsite_potentials.len()
    }
}

fn finite(field: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NotFinite { field, value })
    }
}

fn nonnegative(field: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::Negative { field, value })
    }
}

/// Random stream for realization `index` of a spec seeded with `seed`.
///
/// Every realization owns its own ChaCha stream, so ensembles do not depend
/// on the order in which members are drawn.
pub fn realization_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn symmetric_samples(rng: &mut ChaCha8Rng, bound: f64, count: usize) -> Vec<f64> {
    if bound == 0.0 {
        return vec![0.0; count];
    }
    let dist = Uniform::new_inclusive(-bound, bound);
    (0..count).map(|_| dist.sample(rng)).collect()
}

/// The first realization (index 0) of `spec`.
pub fn realize(spec: &HNSpec) -> Result<LatticeRealization, ModelError> {
    realize_indexed(spec, 0)
}

/// Realization `index` of `spec`.
///
/// Hopping disorder enters only the difference `J_R,j − J_L,j = 2γ + ν_j`;
/// the sum stays at `2J`.
pub fn realize_indexed(spec: &HNSpec, index: u64) -> Result<LatticeRealization, ModelError> {
    spec.validate()?;
    let mut rng = realization_rng(spec.seed, index);
    let bonds = spec.num_bonds();
    let nu = symmetric_samples(&mut rng, spec.hop_disorder_bound, bonds);
    let deltas = symmetric_samples(&mut rng, spec.onsite_disorder_bound, spec.num_sites);

    let (right_hops, left_hops) = nu
        .iter()
        .map(|&n| {
            if n == 0.0 {
                (spec.right_hop(), spec.left_hop())
            } else {
                (spec.right_hop() + 0.5 * n, spec.left_hop() - 0.5 * n)
            }
        })
        .unzip();

    Ok(LatticeRealization {
        right_hops,
        left_hops,
        onsite_potentials: deltas,
        onsite_loss: spec.onsite_loss,
        boundary: spec.boundary,
    })
}

pub fn realize_bkc(spec: &BKCSpec, index: u64) -> Result<BKCRealization, ModelError> {
    spec.validate()?;
    let mut rng = realization_rng(spec.seed, index);
    Ok(BKCRealization {
        hop_amp: spec.hop_amp,
        hop_phase: spec.hop_phase.rem_euclid(TAU),
        pairing: spec.pairing,
        onsite_potentials: symmetric_samples(&mut rng, spec.onsite_disorder_bound, spec.num_sites),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Hermitian,
    Convective,
    /// Opposite-sign hoppings. `J_R·J_L = 0` is reported here too.
    Absolute,
}

pub fn classify_stability(spec: &HNSpec) -> Stability {
    let product = spec.right_hop() * spec.left_hop();
    if spec.hop_imbalance == 0.0 {
        Stability::Hermitian
    } else if product > 0.0 {
        Stability::Convective
    } else {
        Stability::Absolute
    }
}

/// True when one of the two hoppings vanishes, the marginal case folded into
/// [`Stability::Absolute`].
pub fn is_marginal(spec: &HNSpec) -> bool {
    spec.hop_imbalance != 0.0 && spec.right_hop() * spec.left_hop() == 0.0
}

/// Coupling ratios `g_N/g0 = β^{±N}` that cancel the giant-emitter
/// self-energy at the band centre. Only separations with `N mod 4 = 2` admit
/// such a cancellation.
pub fn matched_ratio(beta: f64, separation: u32) -> Result<(f64, f64), ModelError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(ModelError::InvalidBeta(beta));
    }
    if separation % 4 != 2 {
        return Err(ModelError::UnmatchableSeparation(separation));
    }
    let up = beta.powi(separation as i32);
    Ok((up, up.recip()))
}

/// A harmonic emitter coupled to one (small) or two (giant) lattice sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterSpec {
    pub name: String,
    pub detuning: f64,
    pub couplings: Vec<(usize, f64)>,
    pub extra_decay: f64,
}

impl EmitterSpec {
    pub fn new(
        name: impl Into<String>,
        detuning: f64,
        couplings: Vec<(usize, f64)>,
    ) -> Result<Self, ModelError> {
        let spec = Self {
            name: name.into(),
            detuning,
            couplings,
            extra_decay: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn small(name: impl Into<String>, detuning: f64, site: usize, g: f64) -> Self {
        Self {
            name: name.into(),
            detuning,
            couplings: vec![(site, g)],
            extra_decay: 0.0,
        }
    }

    pub fn giant(
        name: impl Into<String>,
        detuning: f64,
        first: (usize, f64),
        second: (usize, f64),
    ) -> Result<Self, ModelError> {
        Self::new(name, detuning, vec![first, second])
    }

    pub fn with_extra_decay(mut self, rate: f64) -> Self {
        self.extra_decay = rate;
        self
    }

    pub fn is_giant(&self) -> bool {
        self.couplings.len() == 2
    }

    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.couplings.iter().map(|&(s, _)| s)
    }

    /// The same emitter with every coupling site moved by `offset`.
    pub fn shifted(&self, offset: usize) -> Self {
        let mut out = self.clone();
        for (site, _) in &mut out.couplings {
            *site += offset;
        }
        out
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.couplings.len();
        if !(1..=2).contains(&n) {
            return Err(ModelError::CouplingCount(n));
        }
        if self.couplings.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(ModelError::UnorderedSites(self.sites().collect()));
        }
        finite("detuning", self.detuning)?;
        nonnegative("extra_decay", self.extra_decay)?;
        for &(_, g) in &self.couplings {
            finite("coupling strength", g)?;
        }
        Ok(())
    }
}

/// Two emitters `c` and `d`, with the braiding of their coupling points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairLayout {
    pub emitter_c: EmitterSpec,
    pub emitter_d: EmitterSpec,
    braided: bool,
}

impl PairLayout {
    pub fn new(emitter_c: EmitterSpec, emitter_d: EmitterSpec) -> Self {
        let braided = match (&emitter_c.couplings[..], &emitter_d.couplings[..]) {
            ([(c1, _), (c2, _)], [(d1, _), (d2, _)]) => c1 < d1 && d1 < c2 && c2 < d2,
            _ => false,
        };
        Self {
            emitter_c,
            emitter_d,
            braided,
        }
    }

    pub fn braided(&self) -> bool {
        self.braided
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(j: f64, gamma: f64) -> HNSpec {
        HNSpec::clean(10, j, gamma)
    }

    #[test]
    fn clean_realization_is_constant() {
        let lat = realize(&spec(10.0, 5.0)).unwrap();
        assert_eq!(lat.right_hops.len(), 9);
        assert!(lat.right_hops.iter().all(|&h| h == 15.0));
        assert!(lat.left_hops.iter().all(|&h| h == 5.0));
        assert!(lat.onsite_potentials.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn periodic_chain_has_one_bond_per_site() {
        let mut s = spec(1.0, 0.2);
        s.boundary = Boundary::Periodic;
        assert_eq!(realize(&s).unwrap().right_hops.len(), 10);
    }

    #[test]
    fn rejects_short_chains() {
        let s = HNSpec::clean(3, 1.0, 0.0);
        assert_eq!(realize(&s), Err(ModelError::TooFewSites(3)));
        let b = BKCSpec::new(2, 1.0, 0.0, 0.0);
        assert!(realize_bkc(&b, 0).is_err());
    }

    #[test]
    fn realization_is_deterministic() {
        let mut s = spec(10.0, 5.0);
        s.hop_disorder_bound = 0.3;
        s.onsite_disorder_bound = 0.7;
        s.seed = 42;
        assert_eq!(realize(&s).unwrap(), realize(&s).unwrap());
        assert_ne!(realize_indexed(&s, 0).unwrap(), realize_indexed(&s, 1).unwrap());
    }

    #[test]
    fn onsite_sampler_statistics() {
        let mut s = HNSpec::clean(10_000, 1.0, 0.5);
        s.onsite_disorder_bound = 0.5;
        s.seed = 1;
        let lat = realize(&s).unwrap();
        let mean = lat.onsite_potentials.iter().sum::<f64>() / 10_000.0;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!(lat.onsite_potentials.iter().all(|d| d.abs() <= 0.5));
    }

    #[test]
    fn hopping_disorder_respects_bounds() {
        let mut s = HNSpec::clean(500, 15.0, 5.0);
        s.hop_disorder_bound = 0.1;
        s.seed = 9;
        let lat = realize(&s).unwrap();
        for (r, l) in lat.right_hops.iter().zip(&lat.left_hops) {
            assert!((r - l - 10.0).abs() <= 0.1 + 1e-12);
            assert!((r + l - 30.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn stability_regimes() {
        assert_eq!(classify_stability(&spec(10.0, 5.0)), Stability::Convective);
        assert_eq!(classify_stability(&spec(10.0, 0.0)), Stability::Hermitian);
        assert_eq!(classify_stability(&spec(1.0, 2.0)), Stability::Absolute);
        let edge = spec(1.0, 1.0);
        assert_eq!(classify_stability(&edge), Stability::Absolute);
        assert!(is_marginal(&edge));
    }

    #[test]
    fn matched_ratio_examples() {
        let (up, down) = matched_ratio(3f64.sqrt(), 2).unwrap();
        assert!((up - 3.0).abs() < 1e-14);
        assert!((down - 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(matched_ratio(1.0, 2).unwrap(), (1.0, 1.0));
        assert_eq!(
            matched_ratio(3f64.sqrt(), 3),
            Err(ModelError::UnmatchableSeparation(3))
        );
        assert!(matched_ratio(-1.0, 2).is_err());
    }

    #[test]
    fn emitter_validation() {
        assert!(EmitterSpec::new("c", 0.0, vec![]).is_err());
        assert!(EmitterSpec::new("c", 0.0, vec![(2, 1.0), (1, 1.0)]).is_err());
        assert!(EmitterSpec::new("c", 0.0, vec![(0, 1.0), (1, 1.0), (2, 1.0)]).is_err());
        assert!(EmitterSpec::giant("c", 0.0, (0, 1.0), (2, 0.5)).unwrap().is_giant());
    }

    #[test]
    fn braiding_needs_interleaved_giants() {
        let c = EmitterSpec::giant("c", 0.0, (0, 1.0), (2, 1.0)).unwrap();
        let d = EmitterSpec::giant("d", 0.0, (1, 1.0), (3, 1.0)).unwrap();
        assert!(PairLayout::new(c.clone(), d.clone()).braided());
        assert!(!PairLayout::new(d.clone(), c.clone()).braided());
        let nested = EmitterSpec::giant("d", 0.0, (1, 1.0), (2 + 5, 1.0)).unwrap();
        let outer = EmitterSpec::giant("c", 0.0, (0, 1.0), (9, 1.0)).unwrap();
        assert!(!PairLayout::new(outer, nested).braided());
        let small = EmitterSpec::small("d", 0.0, 1, 1.0);
        assert!(!PairLayout::new(c, small).braided());
    }

    #[test]
    fn bkc_phase_is_wrapped() {
        let b = BKCSpec::new(8, 1.0, 5.0 * std::f64::consts::PI, 0.5);
        assert!((b.hop_phase - std::f64::consts::PI).abs() < 1e-12);
    }
}
