//! Resolvent quantities of emitters coupled to an infinite Hatano–Nelson
//! chain: branch selection, self-energies, decay rates, decoherence-free
//! points and the two-emitter level-shift operator.
//!
//! Reported self-energies are normalised by `2π` (couplings enter through
//! `G = g/sqrt(2π)`) and signed so that a positive imaginary part means decay.
//! The amplitude decay rate of an emitter in the equations of motion is
//! `2π · Im Σ`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::PairLayout;

/// Offset used for the `+i0⁺` limit, relative to `sqrt(J_R J_L)`.
pub const LIMIT_OFFSET: f64 = 1e-9;
/// Two offsets one decade apart must agree to this relative tolerance.
pub const LIMIT_TOLERANCE: f64 = 1e-6;
/// Number of log-spaced samples scanned for sign changes in root searches.
pub const ROOT_GRID: usize = 1000;
/// Largest `|f|` accepted for a double (tangent) root.
pub const TANGENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("hoppings must be finite with J_R·J_L > 0, got J_R = {right}, J_L = {left}")]
    NotConvective { right: f64, left: f64 },
    #[error("z = {0} lies on the band; evaluate at z + i0⁺")]
    OffsetRequired(Complex64),
    #[error("the +i0⁺ limit is unstable at z = {z}: offsets disagree by {mismatch:e}")]
    UnstableLimit { z: Complex64, mismatch: f64 },
    #[error("the reference coupling g0 must be nonzero")]
    ZeroReference,
    #[error("level shifts need a braided pair of giant emitters")]
    UnsupportedLayout,
    #[error("{field} must be finite and nonnegative, got {value}")]
    Negative { field: &'static str, value: f64 },
    #[error("k-grid must have at least 1024 points, got {0}")]
    GridTooSmall(usize),
}

type Result<T> = std::result::Result<T, AnalyticsError>;

/// Inputs of the giant-emitter self-energy: an emitter coupled with `g0` to
/// site 0 and with `gn` to site `separation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventParams {
    pub z: Complex64,
    pub right_hop: f64,
    pub left_hop: f64,
    pub g0: f64,
    pub gn: f64,
    pub separation: u32,
    pub onsite_loss: f64,
}

impl ResolventParams {
    pub fn new(z: Complex64, right_hop: f64, left_hop: f64, g0: f64, gn: f64, separation: u32) -> Self {
        Self {
            z,
            right_hop,
            left_hop,
            g0,
            gn,
            separation,
            onsite_loss: 0.0,
        }
    }

    pub fn with_loss(mut self, kappa: f64) -> Self {
        self.onsite_loss = kappa;
        self
    }

    pub fn beta(&self) -> f64 {
        (self.right_hop / self.left_hop).sqrt()
    }

    pub fn hop_scale(&self) -> f64 {
        (self.right_hop * self.left_hop).sqrt()
    }

    pub fn big_g0(&self) -> f64 {
        self.g0 / TAU.sqrt()
    }

    pub fn big_gn(&self) -> f64 {
        self.gn / TAU.sqrt()
    }

    fn validate(&self) -> Result<()> {
        check_hops(self.right_hop, self.left_hop)?;
        if !(self.onsite_loss.is_finite() && self.onsite_loss >= 0.0) {
            return Err(AnalyticsError::Negative {
                field: "onsite_loss",
                value: self.onsite_loss,
            });
        }
        Ok(())
    }
}

fn check_hops(right: f64, left: f64) -> Result<()> {
    if right.is_finite() && left.is_finite() && right * left > 0.0 {
        Ok(())
    } else {
        Err(AnalyticsError::NotConvective { right, left })
    }
}

/// The root of `t y² − z y + t = 0` inside the unit circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRoot {
    pub y: Complex64,
    /// `+1` when `y = y₊ = (z + s)/(2t)`, `−1` for `y₋`, with `s` the
    /// principal square root of `z² − 4J_RJ_L`.
    pub sign: i8,
}

pub fn branch_root(z: Complex64, right_hop: f64, left_hop: f64) -> Result<BranchRoot> {
    check_hops(right_hop, left_hop)?;
    let t = (right_hop * left_hop).sqrt();
    let s = (z * z - 4.0 * t * t).sqrt();
    let plus = (z + s) / (2.0 * t);
    let minus = (z - s) / (2.0 * t);
    let (np, nm) = (plus.norm(), minus.norm());
    if (np - 1.0).abs() < 1e-14 && (nm - 1.0).abs() < 1e-14 {
        return Err(AnalyticsError::OffsetRequired(z));
    }
    Ok(if np < nm {
        BranchRoot { y: plus, sign: 1 }
    } else {
        BranchRoot { y: minus, sign: -1 }
    })
}

/// Retarded sum `Σ_{i,j} g_i h_j G_ij(z)` over receiving points `(i, g_i)` and
/// emitting points `(j, h_j)`, with the open-lattice Green's function
/// `G_ij = β^{i−j} y^{|i−j|} / (z − 2t y)` (no `2π` normalisation).
fn retarded_sum(
    z: Complex64,
    right_hop: f64,
    left_hop: f64,
    receive: &[(i64, f64)],
    emit: &[(i64, f64)],
) -> Result<Complex64> {
    let root = branch_root(z, right_hop, left_hop)?;
    let t = (right_hop * left_hop).sqrt();
    let beta = (right_hop / left_hop).sqrt();
    let denom = z - 2.0 * t * root.y;
    let mut acc = Complex64::new(0.0, 0.0);
    for &(i, gi) in receive {
        for &(j, hj) in emit {
            let d = i - j;
            acc += gi * hj * beta.powi(d as i32) * root.y.powi(d.unsigned_abs() as i32);
        }
    }
    Ok(acc / denom)
}

/// Converts a retarded sum to the reported convention.
fn reported(retarded: Complex64) -> Complex64 {
    retarded.conj() / TAU
}

/// Evaluates `f` at `z + iε` for `ε = LIMIT_OFFSET·scale` and `ε/10`, checks
/// that both agree and returns the Richardson-extrapolated value.
///
/// `reference` sets the magnitude against which the mismatch is judged, so
/// that quantities which vanish in the limit do not trip the check.
pub fn plus_i0<F>(z: Complex64, scale: f64, reference: f64, f: F) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let eps = LIMIT_OFFSET * scale;
    let coarse = f(z + Complex64::new(0.0, eps))?;
    let fine = f(z + Complex64::new(0.0, eps / 10.0))?;
    let diff = (coarse - fine).norm();
    let mismatch = if diff == 0.0 {
        0.0
    } else {
        diff / (fine.norm().max(coarse.norm()) + reference)
    };
    if !mismatch.is_finite() || mismatch > LIMIT_TOLERANCE {
        return Err(AnalyticsError::UnstableLimit { z, mismatch });
    }
    Ok((10.0 * fine - coarse) / 9.0)
}

fn giant_points(p: &ResolventParams) -> [(i64, f64); 2] {
    [(0, p.g0), (p.separation as i64, p.gn)]
}

/// Self-energy of the giant emitter at `z + iκ + i0⁺`.
pub fn self_energy_giant(p: &ResolventParams) -> Result<Complex64> {
    p.validate()?;
    let t = p.hop_scale();
    let points = giant_points(p);
    let reference = (p.g0 * p.g0 + p.gn * p.gn) / (TAU * t);
    let z = p.z + Complex64::new(0.0, p.onsite_loss);
    plus_i0(z, t, reference, |zz| {
        retarded_sum(zz, p.right_hop, p.left_hop, &points, &points).map(reported)
    })
}

/// Finite k-grid evaluation of the giant-emitter self-energy, used as an
/// oracle for [`self_energy_giant`]. The `+i0⁺` offset is the fixed
/// `LIMIT_OFFSET·sqrt(J_RJ_L)`.
pub fn self_energy_ksum(p: &ResolventParams, grid_size: usize) -> Result<Complex64> {
    p.validate()?;
    if grid_size < 1024 {
        return Err(AnalyticsError::GridTooSmall(grid_size));
    }
    let t = p.hop_scale();
    let beta = p.beta();
    let n = p.separation as i32;
    let (a, b) = (p.big_g0(), p.big_gn());
    let diag = a * a + b * b;
    let cross = a * b * (beta.powi(n) + beta.powi(-n));
    let z = p.z + Complex64::new(0.0, p.onsite_loss + LIMIT_OFFSET * t);
    let m = grid_size as f64;
    let sum: Complex64 = (0..grid_size)
        .map(|idx| {
            let k = -PI + TAU * idx as f64 / m;
            let phase = Complex64::from_polar(1.0, n as f64 * k);
            (diag + cross * phase) / (z - 2.0 * t * k.cos())
        })
        .sum();
    Ok((sum / m).conj())
}

/// `2 Im Σ(Δ_c + iκ + i0⁺) · sqrt(J_RJ_L) / G0²`, with `Δ_c = Re p.z`.
pub fn effective_decay(p: &ResolventParams) -> Result<f64> {
    if p.g0 == 0.0 {
        return Err(AnalyticsError::ZeroReference);
    }
    let at_detuning = ResolventParams {
        z: Complex64::new(p.z.re, 0.0),
        ..*p
    };
    let sigma = self_energy_giant(&at_detuning)?;
    let big_g0 = p.big_g0();
    Ok(2.0 * sigma.im * p.hop_scale() / (big_g0 * big_g0))
}

/// Occupation decay rate `2 · 2π · Im Σ` of a single emitter, in units of g0.
pub fn decay_rate(p: &ResolventParams) -> Result<f64> {
    Ok(2.0 * TAU * self_energy_giant(p)?.im)
}

/// Positive roots of `f` in `[1/r_max, r_max]`.
///
/// Sign changes on a log-spaced grid are refined by bisection. Grid minima of
/// `|f|` without a sign change are refined by golden-section search and, if
/// `f` touches zero there, reported as a double root.
pub fn positive_roots<F: Fn(f64) -> Result<f64>>(f: F, r_max: f64) -> Result<Vec<f64>> {
    let (lo, hi) = (r_max.recip().ln(), r_max.ln());
    let grid: Vec<f64> = (0..ROOT_GRID)
        .map(|k| (lo + (hi - lo) * k as f64 / (ROOT_GRID - 1) as f64).exp())
        .collect();
    let values = grid.iter().map(|&r| f(r)).collect::<Result<Vec<_>>>()?;
    let mut roots = Vec::new();
    for k in 0..ROOT_GRID {
        if values[k] == 0.0 {
            roots.push(grid[k]);
            continue;
        }
        if k + 1 < ROOT_GRID && values[k] * values[k + 1] < 0.0 {
            roots.push(bisect(&f, grid[k], grid[k + 1], values[k])?);
        }
        if k > 0 && k + 1 < ROOT_GRID {
            let (prev, here, next) = (values[k - 1], values[k], values[k + 1]);
            let local_min = here.abs() < prev.abs() && here.abs() <= next.abs();
            let same_sign = prev * here > 0.0 && here * next > 0.0;
            if local_min && same_sign {
                let (r, v) = golden_min(|r| f(r).map(f64::abs), grid[k - 1], grid[k + 1])?;
                if v <= TANGENT_TOLERANCE {
                    roots.push(r);
                    roots.push(r);
                }
            }
        }
    }
    Ok(roots)
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

fn golden_min<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > 1e-14 * (a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

fn search_limit(right_hop: f64, left_hop: f64, separation: u32) -> f64 {
    let bn = (right_hop / left_hop).sqrt().powi(separation as i32);
    10.0 * bn.max(bn.recip())
}

/// Coupling ratios `r = g_N/g0` at which the effective decay vanishes.
///
/// β is taken from the hoppings. The search covers `[1/r_max, r_max]` with
/// `r_max = 10·max(β^N, β^−N)`; an empty result means no decoherence-free
/// point exists.
pub fn dfp_roots(
    separation: u32,
    detuning: f64,
    kappa: f64,
    right_hop: f64,
    left_hop: f64,
) -> Result<Vec<f64>> {
    let base = ResolventParams::new(detuning.into(), right_hop, left_hop, 1.0, 0.0, separation)
        .with_loss(kappa);
    base.validate()?;
    positive_roots(
        |r| effective_decay(&ResolventParams { gn: r, ..base }),
        search_limit(right_hop, left_hop, separation),
    )
}

/// Discriminant of the resonant (`Δ_c = 0`), `N = 2` decoherence-free
/// condition with on-site loss: `y⁴ (β² + β⁻²)² − 4`, with `y` the branch root
/// at `z = iκ + i0⁺`. Positive means two decoherence-free points.
pub fn discriminant(kappa: f64, right_hop: f64, left_hop: f64) -> Result<f64> {
    check_hops(right_hop, left_hop)?;
    let t = (right_hop * left_hop).sqrt();
    let b2 = right_hop / left_hop;
    let b = b2 + b2.recip();
    let value = plus_i0(Complex64::new(0.0, kappa), t, 1.0, |z| {
        let y = branch_root(z, right_hop, left_hop)?.y;
        Ok(y.powi(4) * b * b - 4.0)
    })?;
    Ok(value.re)
}

/// Coupling ratio `r` with `Γ_ext + 2π Im Σ(i0⁺) = 0` for a resonant giant
/// emitter (`g0 = 1`), or `None` when the lattice-induced gain cannot offset
/// `Γ_ext`. The smallest such ratio is returned.
pub fn balance_root(
    extra_decay: f64,
    right_hop: f64,
    left_hop: f64,
    separation: u32,
) -> Result<Option<f64>> {
    if !(extra_decay.is_finite() && extra_decay >= 0.0) {
        return Err(AnalyticsError::Negative {
            field: "extra_decay",
            value: extra_decay,
        });
    }
    let base = ResolventParams::new(0.0.into(), right_hop, left_hop, 1.0, 0.0, separation);
    base.validate()?;
    // Γ̃ = 2t · (2π Im Σ) / g0², so the balance reads Γ̃ + 2tΓ_ext = 0.
    let shift = 2.0 * base.hop_scale() * extra_decay;
    let roots = positive_roots(
        |r| Ok(effective_decay(&ResolventParams { gn: r, ..base })? + shift),
        search_limit(right_hop, left_hop, separation),
    )?;
    Ok(roots.into_iter().reduce(f64::min))
}

/// The 2×2 level-shift operator of two emitters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelShiftPair {
    pub sigma_cc: Complex64,
    pub sigma_cd: Complex64,
    pub sigma_dc: Complex64,
    pub sigma_dd: Complex64,
}

/// Level-shift operator of a braided pair at `z + i0⁺`. On-site loss enters
/// by passing `z + iκ`.
///
/// `sigma_cd` is the coupling from `d` into `c`.
pub fn level_shift_pair(
    z: Complex64,
    layout: &PairLayout,
    right_hop: f64,
    left_hop: f64,
) -> Result<LevelShiftPair> {
    if !layout.braided() {
        return Err(AnalyticsError::UnsupportedLayout);
    }
    check_hops(right_hop, left_hop)?;
    let points = |e: &crate::model::EmitterSpec| -> Vec<(i64, f64)> {
        e.couplings.iter().map(|&(s, g)| (s as i64, g)).collect()
    };
    let c = points(&layout.emitter_c);
    let d = points(&layout.emitter_d);
    let t = (right_hop * left_hop).sqrt();
    let scale = c.iter().chain(&d).map(|&(_, g)| g * g).sum::<f64>() / (TAU * t);
    let element = |rx: &[(i64, f64)], tx: &[(i64, f64)]| {
        plus_i0(z, t, scale, |zz| {
            retarded_sum(zz, right_hop, left_hop, rx, tx).map(reported)
        })
    };
    Ok(LevelShiftPair {
        sigma_cc: element(&c, &c)?,
        sigma_cd: element(&c, &d)?,
        sigma_dc: element(&d, &c)?,
        sigma_dd: element(&d, &d)?,
    })
}
