//! Quarter-phase bosonic Kitaev chain against two opposite amplitude chains.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skinwave::model::{BKCSpec, EmitterSpec};

fn times(t_end: f64, dt: f64) -> Vec<f64> {
    (0..=(t_end / dt).round() as usize).map(|k| k as f64 * dt).collect()
}

#[test]
fn random_configurations_match_sector_by_sector() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let m = rng.gen_range(30..60);
        let j = rng.gen_range(1.0..5.0);
        let spec = BKCSpec::new(m, j, FRAC_PI_2, j * rng.gen_range(0.1..0.9));
        let first = rng.gen_range(4..m / 2);
        let emitters = vec![
            EmitterSpec::giant("c", 0.0, (first, 1.0), (first + 2, rng.gen_range(-1.0..1.0))).unwrap(),
            EmitterSpec::small("d", 0.0, first + 5, rng.gen_range(0.2..1.5)).with_extra_decay(0.1),
        ];
        let mut initial = BTreeMap::new();
        for label in ["X_c", "P_c", "X_d", "P_d", "x3", "p7"] {
            initial.insert(label.to_string(), rng.gen_range(-1.0..1.0));
        }
        let t = times(10.0, 0.5);
        let dev = common::sector_deviation(&spec, &emitters, &initial, &t, 0.005, true);
        assert!(dev < 1e-10, "deviation {dev}");
    }
}

#[test]
fn mapping_without_gauge_signs_disagrees() {
    let spec = BKCSpec::new(40, 2.0, FRAC_PI_2, 1.0);
    let emitters = vec![EmitterSpec::giant("c", 0.0, (18, 1.0), (20, 0.5)).unwrap()];
    let initial = [("X_c".to_string(), 0.6), ("P_c".to_string(), 0.8)].into();
    let t = times(5.0, 0.5);
    assert!(common::sector_deviation(&spec, &emitters, &initial, &t, 0.005, true) < 1e-10);
    assert!(common::sector_deviation(&spec, &emitters, &initial, &t, 0.005, false) > 1e-3);
}
