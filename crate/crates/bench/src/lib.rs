//! Shared fixtures for the criterion benchmarks in `benches/`.

use pattern_locate::estimators::Knowns;
use pattern_locate::{sample_measurements, AngleDeg, MeasurementSet, Scenario};

/// Reference link at (2 m, 10°) with `rotations` samples 4° apart.
pub fn scenario(sigma_db: f64, rotations: usize) -> Scenario {
    let mut s = Scenario::reference()
        .with_sigma(sigma_db)
        .with_position(2.0, AngleDeg::new(10.0));
    s.rotations = pattern_locate::channel::uniform_rotations(4.0, rotations);
    s
}

/// One measurement set plus the receiver-side knowledge to invert it.
pub fn fixture(sigma_db: f64, rotations: usize, seed: u64) -> (MeasurementSet, Knowns) {
    let s = scenario(sigma_db, rotations);
    let m = sample_measurements(&s, seed).expect("reference scenario samples");
    let k = Knowns::from_scenario(&s).expect("reference scenario knowns");
    (m, k)
}
