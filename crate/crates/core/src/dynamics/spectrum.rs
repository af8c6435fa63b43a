//! Spectral abscissa of a generator.
//!
//! Non-normal chains such as the open Hatano–Nelson lattice have eigenvalues
//! that are extremely ill-conditioned in the site basis, so a direct
//! eigensolve returns spurious growth rates. Before solving, the matrix is
//! brought to a nearly symmetric form by a positive diagonal similarity
//! `D⁻¹ A D`, which leaves the spectrum unchanged.

use super::{Amplitude, DynamicsError, Generator};

/// Ceiling on the growth of the largest entry under the diagonal similarity.
const MAX_ENTRY_GROWTH: f64 = 1e8;

/// Log-scales `x` of `D = diag(e^x)` that equalise `|a_ij|` and `|a_ji|` in a
/// weighted least-squares sense, over all pairs where both are nonzero.
fn symmetrizing_scales<T: Amplitude>(gen: &Generator<T>) -> Vec<f64> {
    let n = gen.dimension();
    // (i, j, weight, target of x_i − x_j)
    let mut pairs = Vec::new();
    for (i, j, v) in gen.entries() {
        if i >= j {
            continue;
        }
        let back = gen.entry(j, i);
        if back == T::default() {
            continue;
        }
        let (a, b) = (v.norm_sqr().sqrt(), back.norm_sqr().sqrt());
        pairs.push((i, j, (a * b).sqrt(), 0.5 * (a.ln() - b.ln())));
    }
    if pairs.is_empty() {
        return vec![0.0; n];
    }
    // Normal equations L x = r of the weighted graph Laplacian, solved by
    // conjugate gradients. A small shift pins the free constant per component.
    let shift = 1e-12 * pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    let mut rhs = vec![0.0; n];
    for &(i, j, w, b) in &pairs {
        rhs[i] += w * b;
        rhs[j] -= w * b;
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = shift * xi;
        }
        for &(i, j, w, _) in &pairs {
            let d = w * (x[i] - x[j]);
            out[i] += d;
            out[j] -= d;
        }
    };
    let mut x = vec![0.0; n];
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let tol = 1e-24 * rhs.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    for _ in 0..20 * n {
        if rr <= tol {
            break;
        }
        apply(&p, &mut ap);
        let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let next: f64 = r.iter().map(|v| v * v).sum();
        let beta = next / rr;
        rr = next;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    x.iter().map(|v| v - mean).collect()
}

/// Largest entry of `D⁻¹ A D` with `D = diag(e^{s·x})`.
fn scaled_max<T: Amplitude>(gen: &Generator<T>, x: &[f64], s: f64) -> f64 {
    gen.entries()
        .map(|(i, j, v)| v.norm_sqr().sqrt() * (s * (x[j] - x[i])).exp())
        .fold(0.0, f64::max)
}

/// Maximum real part over the eigenvalues of the generator.
pub fn spectral_abscissa<T: Amplitude>(gen: &Generator<T>) -> Result<f64, DynamicsError> {
    let n = gen.dimension();
    if gen.nnz() == 0 {
        return Ok(0.0);
    }
    let x = symmetrizing_scales(gen);
    let raw = scaled_max(gen, &x, 0.0);
    // Partial balancing when the full similarity would inflate entries that
    // have no transposed partner; the entry bound is convex in s.
    let mut s = 1.0;
    if !(scaled_max(gen, &x, 1.0) <= MAX_ENTRY_GROWTH * raw) {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if scaled_max(gen, &x, mid) <= MAX_ENTRY_GROWTH * raw {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        s = lo;
    }
    let mut dense = vec![T::default(); n * n];
    for (i, j, v) in gen.entries() {
        dense[i * n + j] = v * (s * (x[j] - x[i])).exp();
    }
    let eig = T::eigenvalues(n, &dense);
    if eig.len() != n || eig.iter().any(|e| !e.is_finite()) {
        return Err(DynamicsError::Eigen("non-finite eigenvalues".into()));
    }
    Ok(eig.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::dynamics::{build_amplitude_generator, uniform_lattice};
    use crate::model::Boundary;

    #[test]
    fn zero_matrix() {
        let gen = Generator::<f64>::from_entries(vec!["u".into(), "v".into()], [], vec![0]).unwrap();
        assert_eq!(spectral_abscissa(&gen).unwrap(), 0.0);
    }

    #[test]
    fn gauge_recovers_hn_scales() {
        let lat = uniform_lattice(12, 15.0, 5.0, 0.0);
        let gen = build_amplitude_generator(&lat, &[]).unwrap();
        let x = symmetrizing_scales(&gen);
        let step = 3f64.sqrt().ln();
        for w in x.windows(2) {
            assert!((w[1] - w[0] - step).abs() < 1e-9, "{x:?}");
        }
    }

    #[test]
    fn open_hn_abscissa_is_loss() {
        let lat = uniform_lattice(200, 15.0, 5.0, 0.5);
        let gen = build_amplitude_generator(&lat, &[]).unwrap();
        assert!((spectral_abscissa(&gen).unwrap() + 0.5).abs() < 1e-6);
    }

    #[test]
    fn periodic_hn_abscissa() {
        let mut lat = uniform_lattice(200, 15.0, 5.0, 0.0);
        lat.boundary = Boundary::Periodic;
        lat.right_hops.push(15.0);
        lat.left_hops.push(5.0);
        let gen = build_amplitude_generator(&lat, &[]).unwrap();
        assert!((spectral_abscissa(&gen).unwrap() - 10.0).abs() < 1e-6);
    }

    #[test]
    fn diagonal_growth() {
        let gen = Generator::<Complex64>::from_entries(
            vec!["u".into(), "v".into()],
            [(0, 0, Complex64::new(-1.0, 2.0)), (1, 1, Complex64::new(0.25, 0.0))],
            vec![0, 1],
        )
        .unwrap();
        assert!((spectral_abscissa(&gen).unwrap() - 0.25).abs() < 1e-14);
    }
}
