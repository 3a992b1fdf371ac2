//! Config loading, shipped presets, and file round trips.

use std::fs;
use std::path::PathBuf;

use pattern_locate::channel::sample_measurements;
use pattern_locate::config::{Config, CONFIG_KEYS};
use pattern_locate::estimators::{estimate, EstimatorConfig, Knowns};
use pattern_locate::montecarlo::{run_sweep, SWEEP_CSV_HEADER};
use pattern_locate::{Error, Interpolation, MeasurementSet, Method, RadiationPattern, SweepAxis};

fn presets_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets")
}

#[test]
fn every_preset_loads_and_describes_a_sweep() {
    let expected = [
        ("fig2.toml", SweepAxis::Snr, 5),
        ("fig3.toml", SweepAxis::RotationCount, 10),
        ("fig4.toml", SweepAxis::DeltaPhi, 10),
    ];
    for (name, axis, points) in expected {
        let config = Config::load(presets_dir().join(name), &[]).unwrap();
        let sweep = config.sweep().unwrap();
        assert_eq!(sweep.axis, axis, "{name}");
        assert_eq!(sweep.axis_values.len(), points, "{name}");
        assert_eq!(sweep.methods, vec![Method::EqSolve, Method::Cid, Method::Mle], "{name}");
        sweep.validate().unwrap();
    }
}

#[test]
fn preset_runs_with_overridden_trial_count() {
    let config = Config::load(presets_dir().join("fig2.toml"), &["trials=8".into(), "axis_values=[10.0, 20.0]".into()]).unwrap();
    let result = run_sweep(&config.sweep().unwrap()).unwrap();
    let csv = result.to_csv();
    assert!(csv.starts_with(SWEEP_CSV_HEADER));
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
}

#[test]
fn config_keys_cover_every_field() {
    // serializing the defaults must produce only documented keys
    let text = toml::to_string(&Config::default()).unwrap();
    let table: toml::Table = toml::from_str(&text).unwrap();
    for key in table.keys() {
        assert!(CONFIG_KEYS.iter().any(|(k, _, _)| k == key), "undocumented key {key}");
    }
}

#[test]
fn unknown_keys_and_bad_values_are_config_errors() {
    assert!(matches!(Config::from_toml_str("no_such_key = 1", &[]), Err(Error::Config(_))));
    assert!(matches!(Config::from_toml_str("", &["d_min_m=-2".into()]).and_then(|c| c.validate()), Err(Error::Config(_))));
    assert!(Config::from_toml_str("", &["path_loss_n=-2".into()]).unwrap().scenario().is_err());
    assert!(matches!(Config::load("/nonexistent/cfg.toml", &[]), Err(Error::Config(_)) | Err(Error::Io(_))));
}

#[test]
fn measurement_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let scenario = Config::default().scenario().unwrap();
    let m = sample_measurements(&scenario.with_sigma(2.0), 5).unwrap();
    m.write_csv(&path).unwrap();
    let back = MeasurementSet::read_csv(&path).unwrap();
    assert_eq!(back.len(), m.len());
    for (a, b) in m.samples.iter().zip(&back.samples) {
        assert!((a.delta_phi.degrees() - b.delta_phi.degrees()).abs() < 1e-12);
        assert!((a.rssi_dbm - b.rssi_dbm).abs() < 1e-12);
    }
}

#[test]
fn tabulated_pattern_from_csv_matches_analytic_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tx.csv");
    let analytic = pattern_locate::default_tx_pattern();
    let mut text = String::from("angle_deg,gain_db\n");
    for i in -180..180 {
        let phi = i as f64;
        // the nulls at ±90° have no positive gain; tabulate a deep floor there
        let g_db = analytic.gain_db(pattern_locate::AngleDeg::new(phi)).unwrap_or(-90.0);
        text.push_str(&format!("{phi},{g_db}\n"));
    }
    fs::write(&path, text).unwrap();
    let table = RadiationPattern::from_csv(&path, Interpolation::LogLinear).unwrap();

    // a tabulated copy of the default pattern supports the same estimators
    let cfg_text = format!("tx_pattern = \"tabulated\"\ntx_pattern_csv = \"{}\"\nsigma_db = 0.0\ntheta0_deg = 12.0\nd0_m = 2.0\n", path.display());
    let config = Config::from_toml_str(&cfg_text, &[]).unwrap();
    assert_eq!(config.tx_pattern().unwrap(), table);
    let scenario = config.scenario().unwrap();
    let m = sample_measurements(&scenario, 0).unwrap();
    let k = Knowns::from_scenario(&scenario).unwrap();
    let e = estimate(Method::Mle, &m, &k, Some(0.0), &EstimatorConfig::default()).unwrap();
    assert!((e.theta_hat - 12.0).abs() < 1e-3);
    assert!((e.d_hat - 2.0).abs() < 1e-4);
}
