//! dB-domain RSSI model with log-normal shadowing.
//!
//! The mean received power follows the Friis law with a general path-loss
//! exponent, `10·log10(P·λ²·G_T·G_R / ((4π)²·dⁿ)) + 30` in dBm with `P` in
//! watts. Shadowing adds i.i.d. zero-mean Gaussian noise in dB.
//!
//! The rotation schedule lists every measurement angle; the first entry is
//! the zero rotation, so `N` angles give `N` samples.
//!
//! Noise is drawn from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)` and shaped with the ziggurat normal sampler from
//! `rand_distr`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::hash::Hasher;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::patterns::{AngleDeg, RadiationPattern};

/// Shadowing sigma at 0 dB SNR unless configured otherwise.
pub const DEFAULT_SIGMA_REF_DB: f64 = 2.0;

/// Full physical configuration of one transmitter/receiver pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Transmit power, milliwatts.
    pub p_t_mw: f64,
    /// Wavelength, metres.
    pub lambda_m: f64,
    pub path_loss_n: f64,
    /// Shadowing standard deviation, dB.
    pub sigma_db: f64,
    /// True distance d₀, metres.
    pub true_d: f64,
    /// True bearing θ₀ of the receiver in the transmitter frame.
    pub true_theta: AngleDeg,
    /// All measurement rotations, first one at zero.
    pub rotations: Vec<AngleDeg>,
    pub tx_pattern: RadiationPattern,
    pub rx_pattern: RadiationPattern,
    /// Fixed reception angle φ_R.
    pub rx_angle: AngleDeg,
}

/// `[0, step, 2·step, …]` with `count` entries.
pub fn uniform_rotations(step_deg: f64, count: usize) -> Vec<AngleDeg> {
    (0..count)
        .map(|i| AngleDeg::new(step_deg * i as f64))
        .collect()
}

/// Linear-domain prefactor `A² = P·λ²/(4π)²` with `P` in watts.
pub fn friis_prefactor(p_t_mw: f64, lambda_m: f64) -> f64 {
    let four_pi = 4.0 * PI;
    p_t_mw * 1e-3 * lambda_m * lambda_m / (four_pi * four_pi)
}

/// Mean RSSI in dBm for prefactor `a2`, linear gains and distance.
///
/// Shared by the simulator and every estimator so that noiseless data
/// inverts exactly.
pub fn model_rssi_dbm(a2: f64, g_t: f64, g_r: f64, path_loss_n: f64, d: f64) -> f64 {
    30.0 + 10.0 * (a2 * g_t * g_r).log10() - 10.0 * path_loss_n * d.log10()
}

impl Scenario {
    /// Default indoor setup: 100 mW, 125 mm, n = 4, σ = 2 dB, eight 4° steps,
    /// skewed-dipole transmitter, 0 dB omnidirectional receiver.
    pub fn reference() -> Self {
        Scenario {
            p_t_mw: 100.0,
            lambda_m: 0.125,
            path_loss_n: 4.0,
            sigma_db: DEFAULT_SIGMA_REF_DB,
            true_d: 2.0,
            true_theta: AngleDeg::new(10.0),
            rotations: uniform_rotations(4.0, 8),
            tx_pattern: crate::default_tx_pattern(),
            rx_pattern: RadiationPattern::omnidirectional(1.0).expect("unit gain"),
            rx_angle: AngleDeg::new(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if !(self.p_t_mw.is_finite() && self.p_t_mw > 0.0) {
            return bad(format!("transmit power must be positive, got {} mW", self.p_t_mw));
        }
        if !(self.lambda_m.is_finite() && self.lambda_m > 0.0) {
            return bad(format!("wavelength must be positive, got {} m", self.lambda_m));
        }
        if !(2.0..=6.0).contains(&self.path_loss_n) {
            return bad(format!("path loss exponent must be in [2, 6], got {}", self.path_loss_n));
        }
        if !(self.sigma_db.is_finite() && self.sigma_db >= 0.0) {
            return bad(format!("sigma must be non-negative, got {} dB", self.sigma_db));
        }
        if !(self.true_d.is_finite() && self.true_d > 0.0) {
            return bad(format!("distance must be positive, got {} m", self.true_d));
        }
        if self.rotations.is_empty() {
            return bad("rotation schedule is empty".into());
        }
        for (i, a) in self.rotations.iter().enumerate() {
            if self.rotations[..i].iter().any(|b| a.diff(*b) == 0.0) {
                return bad(format!("rotation {a} listed twice"));
            }
        }
        Ok(())
    }

    /// `A² = P_T·λ²/(4π)²`, watts·m².
    pub fn a_squared(&self) -> f64 {
        friis_prefactor(self.p_t_mw, self.lambda_m)
    }

    /// Receiver gain at the fixed reception angle.
    pub fn rx_gain(&self) -> Result<f64> {
        self.rx_pattern.gain(self.rx_angle)
    }

    /// Same scenario with a different shadowing sigma.
    pub fn with_sigma(&self, sigma_db: f64) -> Self {
        Scenario {
            sigma_db,
            ..self.clone()
        }
    }

    pub fn with_position(&self, d: f64, theta: AngleDeg) -> Self {
        Scenario {
            true_d: d,
            true_theta: theta,
            ..self.clone()
        }
    }

    /// Scenario seen after moving the transmitter `baseline_m` along its own
    /// 0° axis (orientation unchanged). The receiver stays put, so its
    /// reception angle turns with the bearing.
    pub fn translated(&self, baseline_m: f64) -> Self {
        let (s, c) = self.true_theta.radians().sin_cos();
        let x = self.true_d * c - baseline_m;
        let y = self.true_d * s;
        let theta1 = AngleDeg::from_radians(y.atan2(x));
        Scenario {
            true_d: x.hypot(y),
            true_theta: theta1,
            rx_angle: AngleDeg::new(self.rx_angle.degrees() + theta1.diff(self.true_theta)),
            ..self.clone()
        }
    }

    /// Stable fingerprint used to tie measurement sets back to a scenario.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv64::default();
        h.write(format!("{self:?}").as_bytes());
        h.finish()
    }
}

/// One RSSI sample taken after rotating the transmitter by `delta_phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub delta_phi: AngleDeg,
    pub rssi_dbm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub scenario_id: u64,
    pub samples: Vec<Sample>,
    pub seed: u64,
}

impl MeasurementSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Hash of the exact sample bits; equal checksums mean identical data.
    pub fn checksum(&self) -> u64 {
        let mut h = Fnv64::default();
        for s in &self.samples {
            h.write_u64(s.delta_phi.degrees().to_bits());
            h.write_u64(s.rssi_dbm.to_bits());
        }
        h.finish()
    }

    /// `index,delta_phi_deg,rssi_dbm`, 1-based index.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("index,delta_phi_deg,rssi_dbm\n");
        for (i, s) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", i + 1, s.delta_phi.degrees(), s.rssi_dbm);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path.as_ref())?;
        f.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["index", "delta_phi_deg", "rssi_dbm"] {
            return Err(Error::Io(format!(
                "{}: expected header `index,delta_phi_deg,rssi_dbm`",
                path.display()
            )));
        }
        let mut samples = Vec::new();
        for record in reader.records() {
            let record = record?;
            let num = |i: usize| -> Result<f64> {
                record[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Io(format!("{}: bad number {:?}: {e}", path.display(), &record[i])))
            };
            samples.push(Sample {
                delta_phi: AngleDeg::new(num(1)?),
                rssi_dbm: num(2)?,
            });
        }
        Ok(MeasurementSet {
            scenario_id: 0,
            samples,
            seed: 0,
        })
    }
}

/// Noiseless RSSI (dBm) after rotating the transmitter by `delta_phi`.
pub fn mean_rssi(scenario: &Scenario, delta_phi: AngleDeg) -> Result<f64> {
    let g_t = scenario.tx_pattern.gain(scenario.true_theta + delta_phi)?;
    let g_r = scenario.rx_gain()?;
    Ok(model_rssi_dbm(
        scenario.a_squared(),
        g_t,
        g_r,
        scenario.path_loss_n,
        scenario.true_d,
    ))
}

/// Draws one RSSI sample per scheduled rotation.
pub fn sample_measurements(scenario: &Scenario, seed: u64) -> Result<MeasurementSet> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(scenario.rotations.len());
    for &delta_phi in &scenario.rotations {
        let mean = mean_rssi(scenario, delta_phi)?;
        let z: f64 = StandardNormal.sample(&mut rng);
        let rssi_dbm = if scenario.sigma_db == 0.0 {
            mean
        } else {
            mean + scenario.sigma_db * z
        };
        samples.push(Sample {
            delta_phi,
            rssi_dbm,
        });
    }
    Ok(MeasurementSet {
        scenario_id: scenario.fingerprint(),
        samples,
        seed,
    })
}

/// Shadowing sigma for a given SNR: `σ = σ_ref · 10^(-SNR/20)`.
pub fn snr_to_sigma(snr_db: f64, sigma_ref_db: f64) -> f64 {
    sigma_ref_db * 10f64.powf(-snr_db / 20.0)
}

/// 64-bit FNV-1a; stable across platforms and releases, unlike `DefaultHasher`.
#[derive(Debug)]
pub(crate) struct Fnv64(u64);

impl Default for Fnv64 {
    fn default() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }
}

impl Hasher for Fnv64 {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_gain_scenario() -> Scenario {
        Scenario {
            p_t_mw: 100.0,
            lambda_m: 0.125,
            path_loss_n: 4.0,
            sigma_db: 0.0,
            true_d: 1.0,
            true_theta: AngleDeg::new(0.0),
            rotations: uniform_rotations(4.0, 8),
            tx_pattern: RadiationPattern::omnidirectional(1.0).unwrap(),
            rx_pattern: RadiationPattern::omnidirectional(1.0).unwrap(),
            rx_angle: AngleDeg::new(0.0),
        }
    }

    #[test]
    fn friis_reference_value() {
        // 0.1 W · 0.125² / (4π)² = 9.8946e-6 W → -50.046 dBW → -20.046 dBm,
        // evaluated independently here from the raw numbers.
        let linear = 0.1 * 0.125f64.powi(2) / (16.0 * PI * PI);
        assert!((linear - 9.8946e-6).abs() < 1e-9);
        let expected = 10.0 * linear.log10() + 30.0;
        let got = mean_rssi(&unit_gain_scenario(), AngleDeg::new(0.0)).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - (-20.046)).abs() < 1e-3);
    }

    #[test]
    fn doubling_distance_costs_forty_log_two() {
        let s = unit_gain_scenario();
        let near = mean_rssi(&s, AngleDeg::new(0.0)).unwrap();
        let far = mean_rssi(&s.with_position(2.0, s.true_theta), AngleDeg::new(0.0)).unwrap();
        assert!((near - far - 40.0 * 2f64.log10()).abs() < 1e-12);
        assert!((near - far - 12.0412).abs() < 1e-4);
    }

    #[test]
    fn tenfold_gain_adds_ten_db() {
        let s = unit_gain_scenario();
        let mut boosted = s.clone();
        boosted.tx_pattern = RadiationPattern::omnidirectional(10.0).unwrap();
        let a = mean_rssi(&s, AngleDeg::new(0.0)).unwrap();
        let b = mean_rssi(&boosted, AngleDeg::new(0.0)).unwrap();
        assert!((b - a - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_sigma_is_noiseless() {
        let s = Scenario::reference().with_sigma(0.0);
        let m = sample_measurements(&s, 1234).unwrap();
        assert_eq!(m.len(), s.rotations.len());
        for sample in &m.samples {
            assert_eq!(sample.rssi_dbm, mean_rssi(&s, sample.delta_phi).unwrap());
        }
    }

    #[test]
    fn same_seed_same_bits() {
        let s = Scenario::reference();
        let a = sample_measurements(&s, 99).unwrap();
        let b = sample_measurements(&s, 99).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        assert_eq!(a.checksum(), b.checksum());
        let c = sample_measurements(&s, 100).unwrap();
        assert_ne!(a.checksum(), c.checksum());
    }

    #[test]
    fn shadowing_statistics_at_large_sample() {
        let mut s = Scenario::reference();
        s.rotations = vec![AngleDeg::new(0.0)];
        let mean = mean_rssi(&s, AngleDeg::new(0.0)).unwrap();
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|seed| sample_measurements(&s, seed).unwrap().samples[0].rssi_dbm)
            .collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((m - mean).abs() < 0.02, "mean off by {}", m - mean);
        assert!((var.sqrt() - 2.0).abs() < 0.04, "std {}", var.sqrt());
    }

    #[test]
    fn shadowing_is_uncorrelated_across_rotations() {
        let s = Scenario::reference();
        let means: Vec<f64> = s
            .rotations
            .iter()
            .map(|r| mean_rssi(&s, *r).unwrap())
            .collect();
        let n = 100_000u64;
        let mut acc = [[0.0f64; 3]; 2]; // sum xy, sum xx, sum yy for pairs (0,1), (2,7)
        for seed in 0..n {
            let m = sample_measurements(&s, seed).unwrap();
            let x: Vec<f64> = m.samples.iter().zip(&means).map(|(a, b)| a.rssi_dbm - b).collect();
            for (k, (i, j)) in [(0usize, 1usize), (2, 7)].into_iter().enumerate() {
                acc[k][0] += x[i] * x[j];
                acc[k][1] += x[i] * x[i];
                acc[k][2] += x[j] * x[j];
            }
        }
        for a in acc {
            let r = a[0] / (a[1] * a[2]).sqrt();
            assert!(r.abs() < 0.02, "correlation {r}");
        }
    }

    #[test]
    fn snr_mapping() {
        assert_eq!(snr_to_sigma(0.0, 2.0), 2.0);
        assert!((snr_to_sigma(20.0, 2.0) - 0.2).abs() < 1e-15);
        assert!((snr_to_sigma(10.0, 2.0) - 0.6325).abs() < 1e-4);
        assert!((snr_to_sigma(10.0, 2.0) - 2.0 * 10f64.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let ok = Scenario::reference();
        assert!(ok.validate().is_ok());
        let mut s = ok.clone();
        s.path_loss_n = 1.5;
        assert!(s.validate().is_err());
        let mut s = ok.clone();
        s.rotations.push(AngleDeg::new(4.0));
        assert!(s.validate().is_err());
        let mut s = ok.clone();
        s.true_d = 0.0;
        assert!(s.validate().is_err());
        let mut s = ok;
        s.sigma_db = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn csv_round_trip_preserves_samples() {
        let m = sample_measurements(&Scenario::reference(), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        m.write_csv(&path).unwrap();
        let back = MeasurementSet::read_csv(&path).unwrap();
        assert_eq!(back.samples, m.samples);
    }

    #[test]
    fn translation_matches_geometry() {
        let s = Scenario::reference().with_position(1.0, AngleDeg::new(90.0));
        let t = s.translated(1.0);
        assert!((t.true_d - 2f64.sqrt()).abs() < 1e-12);
        assert!((t.true_theta.degrees() - 135.0).abs() < 1e-12);
        assert!((t.rx_angle.degrees() - 45.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn distance_enters_linearly_in_db(da in 0.1f64..50.0, db in 0.1f64..50.0, n in 2.0f64..6.0) {
            let mut s = Scenario::reference();
            s.path_loss_n = n;
            let ra = mean_rssi(&s.with_position(da, s.true_theta), AngleDeg::new(8.0)).unwrap();
            let rb = mean_rssi(&s.with_position(db, s.true_theta), AngleDeg::new(8.0)).unwrap();
            prop_assert!((ra - rb + 10.0 * n * (da / db).log10()).abs() < 1e-9);
        }
    }
}
