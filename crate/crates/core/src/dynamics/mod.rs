//! Linear generators `v̇ = A v` of the emitter–lattice mean-field equations,
//! their integration and spectral diagnostics.
//!
//! The amplitude picture (Hatano–Nelson chain) works on complex vectors, the
//! quadrature picture (bosonic Kitaev chain) on real ones. Generators are
//! stored in compressed sparse row form; [`Generator::dense`] materialises the
//! full matrix on demand.

mod integrate;
mod spectrum;

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{BKCRealization, Boundary, EmitterSpec, LatticeRealization};

pub use integrate::{
    format_sig, integrate, step_halving_deviation, IntegrateOptions, Trajectory, TrajectoryStatus,
};
pub use spectrum::spectral_abscissa;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("emitter {emitter} couples to site {site}, outside a chain of {num_sites} sites")]
    SiteOutOfRange {
        emitter: String,
        site: usize,
        num_sites: usize,
    },
    #[error("duplicate mode label {0}")]
    DuplicateLabel(String),
    #[error("initial vector has length {got}, generator dimension is {expected}")]
    InitialLength { expected: usize, got: usize },
    #[error("time grid must start at 0 and be strictly increasing")]
    BadTimes,
    #[error("invalid integrator setting: {0}")]
    BadOptions(String),
    #[error("eigensolver failed: {0}")]
    Eigen(String),
}

/// Scalar type of a generator: `Complex64` for amplitudes, `f64` for
/// quadratures.
pub trait Amplitude:
    Copy
    + Debug
    + Default
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
{
    fn norm_sqr(self) -> f64;
    fn is_finite(self) -> bool;
    fn to_complex(self) -> Complex64;
    /// Column names this mode contributes to a CSV header.
    fn csv_header(label: &str) -> Vec<String>;
    /// Values in the order of [`Amplitude::csv_header`].
    fn csv_values(self) -> Vec<f64>;
    /// Eigenvalues of a dense row-major `n × n` matrix.
    fn eigenvalues(n: usize, dense: &[Self]) -> Vec<Complex64>;
}

impl Amplitude for Complex64 {
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }

    fn is_finite(self) -> bool {
        Complex64::is_finite(self)
    }

    fn to_complex(self) -> Complex64 {
        self
    }

    fn csv_header(label: &str) -> Vec<String> {
        vec![format!("{label}_re"), format!("{label}_im")]
    }

    fn csv_values(self) -> Vec<f64> {
        vec![self.re, self.im]
    }

    fn eigenvalues(n: usize, dense: &[Self]) -> Vec<Complex64> {
        use faer::complex_native::c64;
        let m = faer::Mat::<c64>::from_fn(n, n, |i, j| {
            let v = dense[i * n + j];
            c64::new(v.re, v.im)
        });
        m.eigenvalues::<c64>()
            .into_iter()
            .map(|e| Complex64::new(e.re, e.im))
            .collect()
    }
}

impl Amplitude for f64 {
    fn norm_sqr(self) -> f64 {
        self * self
    }

    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }

    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }

    fn csv_header(label: &str) -> Vec<String> {
        vec![label.to_string()]
    }

    fn csv_values(self) -> Vec<f64> {
        vec![self]
    }

    fn eigenvalues(n: usize, dense: &[Self]) -> Vec<Complex64> {
        use faer::complex_native::c64;
        let m = faer::Mat::<f64>::from_fn(n, n, |i, j| dense[i * n + j]);
        m.eigenvalues::<c64>()
            .into_iter()
            .map(|e| Complex64::new(e.re, e.im))
            .collect()
    }
}

/// The matrix `A` of `v̇ = A v` together with mode labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator<T> {
    labels: Vec<String>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    /// Modes watched by the overflow guard.
    watched: Vec<usize>,
}

impl<T: Amplitude> Generator<T> {
    /// Builds a generator from `(row, col, value)` entries; repeated
    /// positions are summed and exact zeros dropped.
    pub fn from_entries(
        labels: Vec<String>,
        entries: impl IntoIterator<Item = (usize, usize, T)>,
        watched: Vec<usize>,
    ) -> Result<Self, DynamicsError> {
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(DynamicsError::DuplicateLabel(l.clone()));
            }
        }
        let dim = labels.len();
        let mut acc: BTreeMap<(usize, usize), T> = BTreeMap::new();
        for (i, j, v) in entries {
            assert!(i < dim && j < dim, "entry ({i}, {j}) outside dimension {dim}");
            *acc.entry((i, j)).or_default() += v;
        }
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(acc.len());
        let mut vals = Vec::with_capacity(acc.len());
        for ((i, j), v) in acc {
            if v == T::default() {
                continue;
            }
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            labels,
            row_ptr,
            cols,
            vals,
            watched,
        })
    }

    pub fn dimension(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Modes checked by the overflow guard: the emitters, or every mode when
    /// there are none.
    pub fn watched(&self) -> &[usize] {
        &self.watched
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        let row = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[row.clone()]
            .binary_search(&j)
            .map(|k| self.vals[row.start + k])
            .unwrap_or_default()
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.dimension()).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.vals[k]))
        })
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Row-major dense copy of the matrix.
    pub fn dense(&self) -> Vec<T> {
        let n = self.dimension();
        let mut out = vec![T::default(); n * n];
        for (i, j, v) in self.entries() {
            out[i * n + j] = v;
        }
        out
    }

    /// `out = A x`.
    pub fn apply(&self, x: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = T::default();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }

    /// Maximum absolute row sum, `‖A‖_∞`.
    pub fn row_sum_norm(&self) -> f64 {
        (0..self.dimension())
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| self.vals[k].norm_sqr().sqrt())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

fn check_sites(emitters: &[EmitterSpec], num_sites: usize) -> Result<(), DynamicsError> {
    for e in emitters {
        if let Some(site) = e.sites().find(|&s| s >= num_sites) {
            return Err(DynamicsError::SiteOutOfRange {
                emitter: e.name.clone(),
                site,
                num_sites,
            });
        }
    }
    Ok(())
}

/// Amplitude-picture generator. Modes are ordered emitters first (labelled
/// by name), then lattice sites `a0, a1, …`.
pub fn build_amplitude_generator(
    lattice: &LatticeRealization,
    emitters: &[EmitterSpec],
) -> Result<Generator<Complex64>, DynamicsError> {
    let m = lattice.num_sites();
    check_sites(emitters, m)?;
    let ne = emitters.len();
    let i = Complex64::i();
    let mut labels: Vec<String> = emitters.iter().map(|e| e.name.clone()).collect();
    labels.extend((0..m).map(|j| format!("a{j}")));

    let mut entries = Vec::new();
    for (k, e) in emitters.iter().enumerate() {
        entries.push((k, k, -i * e.detuning - e.extra_decay));
        for &(site, g) in &e.couplings {
            entries.push((k, ne + site, -i * g));
            entries.push((ne + site, k, -i * g));
        }
    }
    for j in 0..m {
        let row = ne + j;
        entries.push((row, row, -i * lattice.onsite_potentials[j] - lattice.onsite_loss));
    }
    for (b, (&jr, &jl)) in lattice.right_hops.iter().zip(&lattice.left_hops).enumerate() {
        let (from, to) = (b, (b + 1) % m);
        // Rightward hop feeds `to` from `from`; leftward hop feeds `from` from `to`.
        entries.push((ne + to, ne + from, -i * jr));
        entries.push((ne + from, ne + to, -i * jl));
    }
    let watched = if ne > 0 { (0..ne).collect() } else { (0..ne + m).collect() };
    Generator::from_entries(labels, entries, watched)
}

/// `(sin φ, cos φ)` with multiples of `π/2` mapped to exact values so that
/// vanishing couplings produce exact zeros.
fn snapped_sin_cos(phi: f64) -> (f64, f64) {
    let quarter = phi / FRAC_PI_2;
    let nearest = quarter.round();
    if (quarter - nearest).abs() < 1e-12 {
        match (nearest as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        phi.sin_cos()
    }
}

/// Quadrature-picture generator of a bosonic Kitaev chain with open
/// boundaries. Modes are ordered `X_<name>, P_<name>` per emitter, then
/// `x0, x1, …`, then `p0, p1, …`.
pub fn build_quadrature_generator(
    chain: &BKCRealization,
    emitters: &[EmitterSpec],
) -> Result<Generator<f64>, DynamicsError> {
    let m = chain.num_sites();
    check_sites(emitters, m)?;
    let ne = emitters.len();
    let mut labels = Vec::with_capacity(2 * ne + 2 * m);
    for e in emitters {
        labels.push(format!("X_{}", e.name));
        labels.push(format!("P_{}", e.name));
    }
    labels.extend((0..m).map(|j| format!("x{j}")));
    labels.extend((0..m).map(|j| format!("p{j}")));

    let xi = |j: usize| 2 * ne + j;
    let pi = |j: usize| 2 * ne + m + j;
    let (sin, cos) = snapped_sin_cos(chain.hop_phase);
    let (js, jc, lam) = (chain.hop_amp * sin, chain.hop_amp * cos, chain.pairing);

    let mut entries = Vec::new();
    for j in 0..m {
        let delta = chain.onsite_potentials[j];
        entries.push((xi(j), pi(j), delta));
        entries.push((pi(j), xi(j), -delta));
        if j > 0 {
            entries.push((xi(j), xi(j - 1), js + lam));
            entries.push((pi(j), pi(j - 1), js - lam));
            entries.push((xi(j), pi(j - 1), jc));
            entries.push((pi(j), xi(j - 1), -jc));
        }
        if j + 1 < m {
            entries.push((xi(j), xi(j + 1), -(js - lam)));
            entries.push((pi(j), pi(j + 1), -(js + lam)));
            entries.push((xi(j), pi(j + 1), jc));
            entries.push((pi(j), xi(j + 1), -jc));
        }
    }
    for (k, e) in emitters.iter().enumerate() {
        let (x_o, p_o) = (2 * k, 2 * k + 1);
        entries.push((x_o, p_o, e.detuning));
        entries.push((p_o, x_o, -e.detuning));
        entries.push((x_o, x_o, -e.extra_decay));
        entries.push((p_o, p_o, -e.extra_decay));
        for &(site, g) in &e.couplings {
            entries.push((xi(site), p_o, g));
            entries.push((pi(site), x_o, -g));
            entries.push((x_o, pi(site), g));
            entries.push((p_o, xi(site), -g));
        }
    }
    let watched = if ne > 0 { (0..2 * ne).collect() } else { (0..2 * m).collect() };
    Generator::from_entries(labels, entries, watched)
}

/// Convenience: the lattice of a clean open chain with uniform hoppings.
pub fn uniform_lattice(num_sites: usize, right_hop: f64, left_hop: f64, loss: f64) -> LatticeRealization {
    LatticeRealization {
        right_hops: vec![right_hop; num_sites - 1],
        left_hops: vec![left_hop; num_sites - 1],
        onsite_potentials: vec![0.0; num_sites],
        onsite_loss: loss,
        boundary: Boundary::Open,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn amplitude_rows_follow_equations_of_motion() {
        let mut lat = uniform_lattice(6, 15.0, 5.0, 0.5);
        lat.onsite_potentials[2] = 0.3;
        let e = EmitterSpec::giant("c", 1.5, (1, 1.0), (3, 0.25))
            .unwrap()
            .with_extra_decay(0.1);
        let gen = build_amplitude_generator(&lat, &[e]).unwrap();
        assert_eq!(gen.dimension(), 7);
        assert_eq!(gen.labels()[0], "c");
        assert_eq!(gen.labels()[3], "a2");
        assert_eq!(gen.entry(0, 0), c(-0.1, -1.5));
        assert_eq!(gen.entry(0, 2), c(0.0, -1.0));
        assert_eq!(gen.entry(4, 0), c(0.0, -0.25));
        // site 2 (row 3): fed by J_R from site 1 and J_L from site 3
        assert_eq!(gen.entry(3, 2), c(0.0, -15.0));
        assert_eq!(gen.entry(3, 4), c(0.0, -5.0));
        assert_eq!(gen.entry(3, 3), c(-0.5, -0.3));
        assert_eq!(gen.entry(1, 6), c(0.0, 0.0));
    }

    #[test]
    fn periodic_rows_wrap() {
        let mut lat = uniform_lattice(5, 3.0, 1.0, 0.0);
        lat.boundary = Boundary::Periodic;
        lat.right_hops.push(3.0);
        lat.left_hops.push(1.0);
        let gen = build_amplitude_generator(&lat, &[]).unwrap();
        assert_eq!(gen.entry(0, 4), c(0.0, -3.0));
        assert_eq!(gen.entry(4, 0), c(0.0, -1.0));
        assert_eq!(gen.watched().len(), 5);
    }

    #[test]
    fn rejects_out_of_range_and_duplicates() {
        let lat = uniform_lattice(6, 1.0, 1.0, 0.0);
        let far = EmitterSpec::small("c", 0.0, 6, 1.0);
        assert!(matches!(
            build_amplitude_generator(&lat, &[far]),
            Err(DynamicsError::SiteOutOfRange { site: 6, .. })
        ));
        let a = EmitterSpec::small("c", 0.0, 1, 1.0);
        assert!(matches!(
            build_amplitude_generator(&lat, &[a.clone(), a]),
            Err(DynamicsError::DuplicateLabel(_))
        ));
        let clash = EmitterSpec::small("a2", 0.0, 1, 1.0);
        assert!(build_amplitude_generator(&lat, &[clash]).is_err());
    }

    #[test]
    fn quadrature_sectors_decouple_at_quarter_phase() {
        let chain = BKCRealization {
            hop_amp: 2.0,
            hop_phase: FRAC_PI_2,
            pairing: 1.0,
            onsite_potentials: vec![0.0; 8],
        };
        let emitters = [
            EmitterSpec::small("c", 0.0, 2, 1.0),
            EmitterSpec::small("d", 0.0, 4, 1.0),
        ];
        let gen = build_quadrature_generator(&chain, &emitters).unwrap();
        // sector A: x-chain with P emitters; sector B: p-chain with X emitters
        let sector = |label: &str| label.starts_with('x') || label.starts_with("P_");
        for (i, j, v) in gen.entries() {
            let (a, b) = (&gen.labels()[i], &gen.labels()[j]);
            assert_eq!(sector(a), sector(b), "{a} <- {b} = {v}");
        }
        let x3 = gen.index_of("x3").unwrap();
        assert_eq!(gen.entry(x3, gen.index_of("x2").unwrap()), 3.0);
        assert_eq!(gen.entry(x3, gen.index_of("x4").unwrap()), -1.0);
        let p3 = gen.index_of("p3").unwrap();
        assert_eq!(gen.entry(p3, gen.index_of("p2").unwrap()), 1.0);
        assert_eq!(gen.entry(p3, gen.index_of("p4").unwrap()), -3.0);
        let pc = gen.index_of("P_c").unwrap();
        assert_eq!(gen.entry(pc, gen.index_of("x2").unwrap()), -1.0);
    }

    #[test]
    fn disorder_couples_quadratures() {
        let mut chain = BKCRealization {
            hop_amp: 2.0,
            hop_phase: FRAC_PI_2,
            pairing: 1.0,
            onsite_potentials: vec![0.0; 6],
        };
        chain.onsite_potentials[1] = 0.25;
        let gen = build_quadrature_generator(&chain, &[]).unwrap();
        let (x1, p1) = (gen.index_of("x1").unwrap(), gen.index_of("p1").unwrap());
        assert_eq!(gen.entry(x1, p1), 0.25);
        assert_eq!(gen.entry(p1, x1), -0.25);
    }

    #[test]
    fn snapping_gives_exact_values() {
        assert_eq!(snapped_sin_cos(FRAC_PI_2), (1.0, 0.0));
        assert_eq!(snapped_sin_cos(3.0 * FRAC_PI_2), (-1.0, 0.0));
        assert_eq!(snapped_sin_cos(0.0), (0.0, 1.0));
        let (s, c) = snapped_sin_cos(0.3);
        assert_eq!((s, c), 0.3f64.sin_cos());
    }

    #[test]
    fn apply_matches_dense_product() {
        let lat = uniform_lattice(5, 2.0, 1.0, 0.1);
        let gen = build_amplitude_generator(&lat, &[EmitterSpec::small("c", 0.5, 2, 0.7)]).unwrap();
        let x: Vec<Complex64> = (0..6).map(|k| c(k as f64, 1.0 - k as f64)).collect();
        let mut y = vec![Complex64::default(); 6];
        gen.apply(&x, &mut y);
        let dense = gen.dense();
        for i in 0..6 {
            let expect: Complex64 = (0..6).map(|j| dense[i * 6 + j] * x[j]).sum();
            assert!((expect - y[i]).norm() < 1e-12);
        }
        assert!((gen.row_sum_norm() - (2.0 + 1.0 + 0.7 + 0.1)).abs() < 1e-12);
    }
}
