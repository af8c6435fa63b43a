//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use num_complex::Complex64;
use skinwave::dynamics::{build_amplitude_generator, build_quadrature_generator, integrate, IntegrateOptions};
use skinwave::model::{realize_bkc, BKCSpec, Boundary, EmitterSpec, LatticeRealization};

/// `i^k` for any integer `k`, exact.
fn i_pow(k: i64) -> Complex64 {
    Complex64::i().powi(k.rem_euclid(4) as i32)
}

/// Largest deviation between a quarter-phase, disorder-free quadrature
/// simulation and two amplitude simulations of the opposite chains
/// `(J+λ, J−λ)` and `(J−λ, J+λ)`, mapped back to quadratures.
///
/// The map is `a_j = (−i)^j u_j` on the lattice and `c = i^{1−j0}·(±Q)` on an
/// emitter whose first coupling site is `j0`, which turns a coupling at
/// `j0 + 2k` into `(−1)^k` times itself. `gauge_signs = false` skips that
/// sign change and serves as a negative control.
pub fn sector_deviation(
    spec: &BKCSpec,
    emitters: &[EmitterSpec],
    initial: &BTreeMap<String, f64>,
    times: &[f64],
    step: f64,
    gauge_signs: bool,
) -> f64 {
    // Both routes take the same fixed step.
    let opts = IntegrateOptions {
        courant: 1e9,
        max_step: Some(step),
        ..Default::default()
    };
    let chain = realize_bkc(spec, 0).unwrap();
    let qgen = build_quadrature_generator(&chain, emitters).unwrap();
    let mut q0 = vec![0.0; qgen.dimension()];
    for (label, &v) in initial {
        q0[qgen.index_of(label).unwrap()] = v;
    }
    let quad = integrate(&qgen, &q0, times, &opts).unwrap();

    let (j, lam, m) = (spec.hop_amp, spec.pairing, spec.num_sites);
    let mut worst: f64 = 0.0;
    // (hoppings, emitter quadrature, lattice quadrature, sign of the emitter map)
    for (jr, jl, emitter_q, site_q, sign) in [(j + lam, j - lam, "P", "x", 1.0), (j - lam, j + lam, "X", "p", -1.0)] {
        let mapped: Vec<EmitterSpec> = emitters
            .iter()
            .map(|e| {
                let j0 = e.couplings[0].0 as i64;
                let couplings = e
                    .couplings
                    .iter()
                    .map(|&(s, g)| {
                        let d = s as i64 - j0;
                        assert_eq!(d % 2, 0, "the map needs even separations");
                        let flip = gauge_signs && (d / 2) % 2 != 0;
                        (s, if flip { -g } else { g })
                    })
                    .collect();
                EmitterSpec::new(e.name.clone(), 0.0, couplings)
                    .unwrap()
                    .with_extra_decay(e.extra_decay)
            })
            .collect();
        let lattice = LatticeRealization {
            right_hops: vec![jr; m - 1],
            left_hops: vec![jl; m - 1],
            onsite_potentials: vec![0.0; m],
            onsite_loss: 0.0,
            boundary: Boundary::Open,
        };
        let gen = build_amplitude_generator(&lattice, &mapped).unwrap();
        let emitter_cols: Vec<(usize, usize, i64)> = emitters
            .iter()
            .map(|e| {
                (
                    gen.index_of(&e.name).unwrap(),
                    qgen.index_of(&format!("{emitter_q}_{}", e.name)).unwrap(),
                    e.couplings[0].0 as i64,
                )
            })
            .collect();
        let site_cols: Vec<(usize, usize, i64)> = (0..m)
            .map(|s| {
                (
                    gen.index_of(&format!("a{s}")).unwrap(),
                    qgen.index_of(&format!("{site_q}{s}")).unwrap(),
                    s as i64,
                )
            })
            .collect();
        let mut a0 = vec![Complex64::default(); gen.dimension()];
        for &(ka, kq, j0) in &emitter_cols {
            a0[ka] = i_pow(1 - j0) * (sign * q0[kq]);
        }
        for &(ka, kq, s) in &site_cols {
            a0[ka] = i_pow(-s) * q0[kq];
        }
        let amp = integrate(&gen, &a0, times, &opts).unwrap();
        assert_eq!(amp.values.len(), quad.values.len());
        for (row_q, row_a) in quad.values.iter().zip(&amp.values) {
            for &(ka, kq, j0) in &emitter_cols {
                let back = i_pow(j0 - 1) * row_a[ka] * sign;
                worst = worst.max((back - row_q[kq]).norm());
            }
            for &(ka, kq, s) in &site_cols {
                let back = i_pow(s) * row_a[ka];
                worst = worst.max((back - row_q[kq]).norm());
            }
        }
    }
    worst
}
