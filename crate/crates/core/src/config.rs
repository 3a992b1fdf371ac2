//! Flat TOML configuration shared by the CLI and presets.
//!
//! Every physical quantity carries its unit in the key name. Unknown keys are
//! rejected. Overrides of the form `key=value` are parsed as TOML values
//! (falling back to a bare string) and applied before validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{BiasModel, MonteCarloBias};
use crate::channel::{uniform_rotations, Scenario, DEFAULT_SIGMA_REF_DB};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, MleSearch, Method, SimilarityMode};
use crate::montecarlo::{PositionMode, SweepAxis, SweepConfig};
use crate::patterns::{AngleDeg, Interpolation, RadiationPattern};
use crate::solver::{GridSpec, DEFAULT_TOUCH_TOL};

/// `(key, unit, description)` for every accepted key.
pub const CONFIG_KEYS: &[(&str, &str, &str)] = &[
    ("pt_mw", "mW", "transmit power"),
    ("lambda_mm", "mm", "carrier wavelength"),
    ("path_loss_n", "-", "path-loss exponent"),
    ("sigma_db", "dB", "shadowing standard deviation (exclusive with snr_db)"),
    ("snr_db", "dB", "SNR; sigma = sigma_ref_db * 10^(-snr/20)"),
    ("sigma_ref_db", "dB", "shadowing sigma at 0 dB SNR"),
    ("d0_m", "m", "true distance"),
    ("theta0_deg", "deg", "true bearing"),
    ("rotations_deg", "deg list", "explicit rotation schedule (first entry 0)"),
    ("rotation_step_deg", "deg", "uniform schedule step"),
    ("rotation_count", "count", "uniform schedule length N"),
    ("tx_pattern", "-", "omni | dipole | asymmetric | tabulated"),
    ("tx_gain_db", "dBi", "gain of an omni transmit pattern"),
    ("tx_epsilon", "-", "skew depth of the asymmetric pattern, 0 <= eps <= 0.9"),
    ("tx_skew_deg", "deg", "skew phase of the asymmetric pattern"),
    ("tx_pattern_csv", "path", "angle_deg,gain_db table for tabulated patterns"),
    ("tx_interpolation", "-", "log_linear | linear"),
    ("rx_pattern", "-", "omni | dipole | asymmetric | tabulated"),
    ("rx_gain_db", "dB", "extra receiver gain applied to the rx pattern"),
    ("rx_epsilon", "-", "skew depth of an asymmetric rx pattern"),
    ("rx_skew_deg", "deg", "skew phase of an asymmetric rx pattern"),
    ("rx_pattern_csv", "path", "angle_deg,gain_db table for a tabulated rx pattern"),
    ("rx_interpolation", "-", "log_linear | linear"),
    ("rx_angle_deg", "deg", "fixed reception angle"),
    ("seed", "-", "noise seed for simulate"),
    ("theta_min_deg", "deg", "lower bound of the bearing search and sampling range"),
    ("theta_max_deg", "deg", "upper bound of the bearing search and sampling range"),
    ("d_min_m", "m", "lower bound of the distance search and sampling range"),
    ("d_max_m", "m", "upper bound of the distance search and sampling range"),
    ("grid_d_steps", "count", "coarse grid points in distance"),
    ("grid_theta_steps", "count", "coarse grid points in bearing"),
    ("refine_iters", "count", "grid refinement rounds"),
    ("refine_shrink", "-", "window shrink factor per refinement round"),
    ("theta_step_deg", "deg", "target-curve sampling step for cid"),
    ("touch_tol_m", "m", "curves closer than this at a vertex are touching"),
    ("cid_outlier_mad", "-", "cid outlier gate in robust standard deviations (inf disables)"),
    ("cid_margin_deg", "deg", "cid curve sampling extends this far beyond the bearing range"),
    ("similarity", "-", "least_squares | correlation"),
    ("mle_search", "-", "profile | joint"),
    ("baseline_m", "m", "transmitter displacement for the two-position fix"),
    ("axis", "-", "sweep axis: snr | rotation_count | delta_phi"),
    ("axis_values", "dB | count | deg", "sweep points, strictly increasing"),
    ("trials", "count", "Monte-Carlo trials per axis point"),
    ("methods", "-", "list of eqsolve | cid | mle | similarity"),
    ("master_seed", "-", "sweep seed (defaults to seed)"),
    ("position_mode", "-", "sampled | fixed"),
    ("crlb_bias", "-", "analytic | unbiased | monte_carlo"),
    ("crlb_bias_trials", "count", "trials for the monte_carlo bias gradient"),
];

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub pt_mw: f64,
    pub lambda_mm: f64,
    pub path_loss_n: f64,
    pub sigma_db: Option<f64>,
    pub snr_db: Option<f64>,
    pub sigma_ref_db: f64,
    pub d0_m: f64,
    pub theta0_deg: f64,
    pub rotations_deg: Option<Vec<f64>>,
    pub rotation_step_deg: f64,
    pub rotation_count: usize,
    pub tx_pattern: String,
    pub tx_gain_db: f64,
    pub tx_epsilon: f64,
    pub tx_skew_deg: f64,
    pub tx_pattern_csv: Option<PathBuf>,
    pub tx_interpolation: String,
    pub rx_pattern: String,
    pub rx_gain_db: f64,
    pub rx_epsilon: f64,
    pub rx_skew_deg: f64,
    pub rx_pattern_csv: Option<PathBuf>,
    pub rx_interpolation: String,
    pub rx_angle_deg: f64,
    pub seed: u64,
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
    pub d_min_m: f64,
    pub d_max_m: f64,
    pub grid_d_steps: usize,
    pub grid_theta_steps: usize,
    pub refine_iters: usize,
    pub refine_shrink: f64,
    pub theta_step_deg: f64,
    pub touch_tol_m: f64,
    pub cid_outlier_mad: f64,
    pub cid_margin_deg: f64,
    pub similarity: String,
    pub mle_search: String,
    pub baseline_m: f64,
    pub axis: Option<String>,
    pub axis_values: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<String>,
    pub master_seed: Option<u64>,
    pub position_mode: String,
    pub crlb_bias: String,
    pub crlb_bias_trials: usize,
}

impl Default for Config {
    fn default() -> Self {
        let grid = GridSpec::default();
        Config {
            pt_mw: 100.0,
            lambda_mm: 125.0,
            path_loss_n: 4.0,
            sigma_db: None,
            snr_db: None,
            sigma_ref_db: DEFAULT_SIGMA_REF_DB,
            d0_m: 2.0,
            theta0_deg: 10.0,
            rotations_deg: None,
            rotation_step_deg: 4.0,
            rotation_count: 8,
            tx_pattern: "asymmetric".into(),
            tx_gain_db: 0.0,
            tx_epsilon: crate::DEFAULT_SKEW_EPSILON,
            tx_skew_deg: crate::DEFAULT_SKEW_DEG,
            tx_pattern_csv: None,
            tx_interpolation: "log_linear".into(),
            rx_pattern: "omni".into(),
            rx_gain_db: 0.0,
            rx_epsilon: crate::DEFAULT_SKEW_EPSILON,
            rx_skew_deg: crate::DEFAULT_SKEW_DEG,
            rx_pattern_csv: None,
            rx_interpolation: "log_linear".into(),
            rx_angle_deg: 0.0,
            seed: 0,
            theta_min_deg: grid.theta_range.0,
            theta_max_deg: grid.theta_range.1,
            d_min_m: grid.d_range.0,
            d_max_m: grid.d_range.1,
            grid_d_steps: grid.coarse_steps.0,
            grid_theta_steps: grid.coarse_steps.1,
            refine_iters: grid.refine_iters,
            refine_shrink: grid.refine_shrink,
            theta_step_deg: 0.1,
            touch_tol_m: DEFAULT_TOUCH_TOL,
            cid_outlier_mad: crate::estimators::DEFAULT_CID_GATE,
            cid_margin_deg: crate::estimators::DEFAULT_CID_MARGIN_DEG,
            similarity: "least_squares".into(),
            mle_search: "profile".into(),
            baseline_m: 0.5,
            axis: None,
            axis_values: Vec::new(),
            trials: 100,
            methods: vec!["eqsolve".into(), "cid".into(), "mle".into()],
            master_seed: None,
            position_mode: "sampled".into(),
            crlb_bias: "analytic".into(),
            crlb_bias_trials: 2000,
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

impl Config {
    /// Parses TOML text and applies `key=value` overrides.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
            table.insert(key.trim().to_string(), parse_value(value.trim()));
        }
        let config: Config = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text, overrides)?;
        // relative table paths resolve against the config file
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.tx_pattern_csv, &mut config.rx_pattern_csv].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    /// Sets both the simulation seed and the sweep seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.master_seed = Some(seed);
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_db.is_some() && self.snr_db.is_some() {
            return Err(Error::Config("set at most one of sigma_db and snr_db".into()));
        }
        if let Some(s) = self.sigma_db {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::Config(format!("sigma_db must be >= 0, got {s}")));
            }
        }
        if !(self.theta_min_deg < self.theta_max_deg && self.d_min_m > 0.0 && self.d_min_m < self.d_max_m) {
            return Err(Error::Config("search ranges must be non-empty with d_min_m > 0".into()));
        }
        if self.rotations_deg.is_none() && self.rotation_count == 0 {
            return Err(Error::Config("rotation_count must be positive".into()));
        }
        if !(self.cid_outlier_mad > 0.0) {
            return Err(Error::Config("cid_outlier_mad must be positive".into()));
        }
        if !(self.cid_margin_deg >= 0.0 && self.cid_margin_deg < 180.0) {
            return Err(Error::Config("cid_margin_deg must be in [0, 180)".into()));
        }
        if !(self.theta_step_deg > 0.0) {
            return Err(Error::Config("theta_step_deg must be positive".into()));
        }
        self.interpolation(&self.tx_interpolation)?;
        self.interpolation(&self.rx_interpolation)?;
        self.similarity_mode()?;
        self.mle_search_mode()?;
        self.method_list()?;
        self.position_mode.parse::<PositionMode>()?;
        self.bias_model()?;
        if let Some(axis) = &self.axis {
            axis.parse::<SweepAxis>()?;
        }
        Ok(())
    }

    /// Shadowing σ if the config determines one.
    pub fn noise_sigma(&self) -> Option<f64> {
        self.sigma_db
            .or_else(|| self.snr_db.map(|snr| crate::channel::snr_to_sigma(snr, self.sigma_ref_db)))
    }

    fn interpolation(&self, name: &str) -> Result<Interpolation> {
        match name {
            "log_linear" => Ok(Interpolation::LogLinear),
            "linear" => Ok(Interpolation::Linear),
            _ => Err(Error::Config(format!("unknown interpolation {name:?} (log_linear, linear)"))),
        }
    }

    fn pattern(
        &self,
        kind: &str,
        gain_db: f64,
        epsilon: f64,
        skew_deg: f64,
        csv: Option<&PathBuf>,
        interpolation: &str,
    ) -> Result<RadiationPattern> {
        match kind {
            "omni" => RadiationPattern::omnidirectional(10f64.powf(gain_db / 10.0)),
            "dipole" => Ok(RadiationPattern::dipole()),
            "asymmetric" => RadiationPattern::asymmetric(epsilon, skew_deg),
            "tabulated" => {
                let path = csv.ok_or_else(|| Error::Config("tabulated pattern needs a *_pattern_csv path".into()))?;
                RadiationPattern::from_csv(path, self.interpolation(interpolation)?)
            }
            _ => Err(Error::Config(format!("unknown pattern {kind:?} (omni, dipole, asymmetric, tabulated)"))),
        }
    }

    pub fn tx_pattern(&self) -> Result<RadiationPattern> {
        self.pattern(
            &self.tx_pattern,
            self.tx_gain_db,
            self.tx_epsilon,
            self.tx_skew_deg,
            self.tx_pattern_csv.as_ref(),
            &self.tx_interpolation,
        )
    }

    pub fn rx_pattern(&self) -> Result<RadiationPattern> {
        let base = self.pattern(
            &self.rx_pattern,
            0.0,
            self.rx_epsilon,
            self.rx_skew_deg,
            self.rx_pattern_csv.as_ref(),
            &self.rx_interpolation,
        )?;
        base.scaled(10f64.powf(self.rx_gain_db / 10.0))
    }

    pub fn rotations(&self) -> Vec<AngleDeg> {
        match &self.rotations_deg {
            Some(list) => list.iter().map(|&v| AngleDeg::new(v)).collect(),
            None => uniform_rotations(self.rotation_step_deg, self.rotation_count),
        }
    }

    /// Scenario with σ = 0 when the config does not fix the noise.
    pub fn scenario(&self) -> Result<Scenario> {
        let scenario = Scenario {
            p_t_mw: self.pt_mw,
            lambda_m: self.lambda_mm * 1e-3,
            path_loss_n: self.path_loss_n,
            sigma_db: self.noise_sigma().unwrap_or(0.0),
            true_d: self.d0_m,
            true_theta: AngleDeg::new(self.theta0_deg),
            rotations: self.rotations(),
            tx_pattern: self.tx_pattern()?,
            rx_pattern: self.rx_pattern()?,
            rx_angle: AngleDeg::new(self.rx_angle_deg),
        };
        scenario.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(scenario)
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            d_range: (self.d_min_m, self.d_max_m),
            theta_range: (self.theta_min_deg, self.theta_max_deg),
            coarse_steps: (self.grid_d_steps, self.grid_theta_steps),
            refine_iters: self.refine_iters,
            refine_shrink: self.refine_shrink,
        }
    }

    pub fn similarity_mode(&self) -> Result<SimilarityMode> {
        self.similarity.parse()
    }

    pub fn mle_search_mode(&self) -> Result<MleSearch> {
        match self.mle_search.as_str() {
            "profile" => Ok(MleSearch::Profile),
            "joint" => Ok(MleSearch::Joint),
            other => Err(Error::Config(format!("unknown mle_search {other:?} (profile, joint)"))),
        }
    }

    pub fn estimator(&self) -> Result<EstimatorConfig> {
        let grid = self.grid();
        grid.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(EstimatorConfig {
            grid,
            theta_step_deg: self.theta_step_deg,
            touch_tol_m: self.touch_tol_m,
            cid_outlier_mad: self.cid_outlier_mad,
            cid_margin_deg: self.cid_margin_deg,
            mle_search: self.mle_search_mode()?,
            similarity: self.similarity_mode()?,
        })
    }

    pub fn method_list(&self) -> Result<Vec<Method>> {
        self.methods.iter().map(|m| m.parse()).collect()
    }

    pub fn bias_model(&self) -> Result<BiasModel> {
        match self.crlb_bias.as_str() {
            "analytic" => Ok(BiasModel::Analytic),
            "unbiased" => Ok(BiasModel::Unbiased),
            "monte_carlo" => Ok(BiasModel::MonteCarlo(MonteCarloBias {
                trials: self.crlb_bias_trials,
                seed: self.seed,
                ..MonteCarloBias::default()
            })),
            other => Err(Error::Config(format!("unknown crlb_bias {other:?} (analytic, unbiased, monte_carlo)"))),
        }
    }

    pub fn sweep(&self) -> Result<SweepConfig> {
        let axis: SweepAxis = self
            .axis
            .as_deref()
            .ok_or_else(|| Error::Config("sweep needs an axis".into()))?
            .parse()?;
        let mut base = self.scenario()?;
        if axis != SweepAxis::Snr && self.noise_sigma().is_none() {
            return Err(Error::Config("sweeps over N or step need sigma_db or snr_db".into()));
        }
        if axis == SweepAxis::Snr {
            base.sigma_db = self.sigma_ref_db;
        }
        let config = SweepConfig {
            base_scenario: base,
            axis,
            axis_values: self.axis_values.clone(),
            trials: self.trials,
            methods: self.method_list()?,
            master_seed: self.master_seed.unwrap_or(self.seed),
            position_mode: self.position_mode.parse()?,
            d_range: (self.d_min_m, self.d_max_m),
            theta_range: (self.theta_min_deg, self.theta_max_deg),
            sigma_ref_db: self.sigma_ref_db,
            estimator: self.estimator()?,
        };
        config.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_reference_scenario() {
        let c = Config::from_toml_str("sigma_db = 2.0", &[]).unwrap();
        assert_eq!(c.scenario().unwrap(), Scenario::reference());
    }

    #[test]
    fn unknown_key_rejected() {
        let err = Config::from_toml_str("sigma_dbb = 2.0", &[]).unwrap_err();
        assert!(err.to_string().contains("sigma_dbb"), "{err}");
    }

    #[test]
    fn overrides_apply() {
        let c = Config::from_toml_str(
            "sigma_db = 2.0",
            &["trials=7".into(), "methods=[\"mle\"]".into(), "tx_pattern=dipole".into()],
        )
        .unwrap();
        assert_eq!(c.trials, 7);
        assert_eq!(c.method_list().unwrap(), vec![Method::Mle]);
        assert_eq!(c.tx_pattern().unwrap(), RadiationPattern::dipole());
        assert!(Config::from_toml_str("", &["trials".into()]).is_err());
    }

    #[test]
    fn sigma_and_snr_exclusive() {
        assert!(Config::from_toml_str("sigma_db = 1.0\nsnr_db = 10.0", &[]).is_err());
        let c = Config::from_toml_str("snr_db = 20.0", &[]).unwrap();
        assert!((c.noise_sigma().unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(Config::default().noise_sigma(), None);
    }

    #[test]
    fn every_field_is_documented() {
        let text = toml::to_string(&toml::Table::new()).unwrap();
        assert!(text.is_empty());
        for (key, _, _) in CONFIG_KEYS {
            let overrides = [format!("{key}={}", sample_value(key))];
            let r = Config::from_toml_str("", &overrides);
            assert!(!matches!(&r, Err(Error::Config(m)) if m.contains("unknown field")), "{key}: {r:?}");
        }
    }

    fn sample_value(key: &str) -> &'static str {
        match key {
            "rotations_deg" | "axis_values" => "[0.0, 4.0]",
            "methods" => "[\"cid\"]",
            "tx_pattern_csv" | "rx_pattern_csv" => "\"x.csv\"",
            "tx_pattern" | "rx_pattern" => "\"dipole\"",
            "tx_interpolation" | "rx_interpolation" => "\"linear\"",
            "similarity" => "\"correlation\"",
            "mle_search" => "\"joint\"",
            "axis" => "\"snr\"",
            "position_mode" => "\"fixed\"",
            "crlb_bias" => "\"unbiased\"",
            "seed" | "master_seed" | "trials" | "rotation_count" | "grid_d_steps" | "grid_theta_steps"
            | "refine_iters" | "crlb_bias_trials" => "3",
            _ => "1.0",
        }
    }
}
