//! Paired-seed Monte-Carlo sweeps.
//!
//! Each axis point draws `trials` measurement sets. Trial `t` at axis index
//! `a` uses noise seed `split(master, a, t)` and, in sampled mode, a true
//! position drawn from a seed that depends on `t` only, so every axis point
//! sees the same positions. All requested estimators run on the same
//! measurement set, and results are gathered in index order so the output
//! does not depend on thread scheduling.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::{BiasModel, CrlbReport};
use crate::channel::{sample_measurements, snr_to_sigma, uniform_rotations, Scenario, DEFAULT_SIGMA_REF_DB};
use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorConfig, Knowns, Method};
use crate::patterns::AngleDeg;

/// Stream index reserved for position draws (never a valid axis index).
const POSITION_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Axis values are SNRs in dB, mapped to σ through the reference σ.
    Snr,
    /// Axis values are rotation counts `N`.
    RotationCount,
    /// Axis values are rotation steps in degrees.
    DeltaPhi,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Snr => "snr",
            SweepAxis::RotationCount => "rotation_count",
            SweepAxis::DeltaPhi => "delta_phi",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "snr" => Ok(SweepAxis::Snr),
            "rotation_count" | "n" => Ok(SweepAxis::RotationCount),
            "delta_phi" | "step" => Ok(SweepAxis::DeltaPhi),
            _ => Err(Error::Config(format!("unknown sweep axis {s:?} (snr, rotation_count, delta_phi)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PositionMode {
    /// Fresh uniform position per trial.
    #[default]
    Sampled,
    /// Always the base scenario's true position.
    Fixed,
}

impl FromStr for PositionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sampled" => Ok(PositionMode::Sampled),
            "fixed" => Ok(PositionMode::Fixed),
            _ => Err(Error::Config(format!("unknown position mode {s:?} (sampled, fixed)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base_scenario: Scenario,
    pub axis: SweepAxis,
    pub axis_values: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    pub position_mode: PositionMode,
    pub d_range: (f64, f64),
    pub theta_range: (f64, f64),
    pub sigma_ref_db: f64,
    pub estimator: EstimatorConfig,
}

impl SweepConfig {
    pub fn new(base_scenario: Scenario, axis: SweepAxis, axis_values: Vec<f64>) -> Self {
        SweepConfig {
            base_scenario,
            axis,
            axis_values,
            trials: 100,
            methods: vec![Method::EqSolve, Method::Cid, Method::Mle],
            master_seed: 0,
            position_mode: PositionMode::Sampled,
            d_range: (0.5, 5.0),
            theta_range: (-70.0, 70.0),
            sigma_ref_db: DEFAULT_SIGMA_REF_DB,
            estimator: EstimatorConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base_scenario.validate()?;
        if self.axis_values.is_empty() {
            return Err(Error::Config("axis_values must not be empty".into()));
        }
        if self.axis_values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("axis_values must be strictly increasing".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.axis == SweepAxis::RotationCount
            && self.axis_values.iter().any(|&v| v < 1.0 || v.fract() != 0.0)
        {
            return Err(Error::Config("rotation counts must be positive integers".into()));
        }
        let (d0, d1) = self.d_range;
        let (t0, t1) = self.theta_range;
        if !(d0 > 0.0 && d0 < d1 && t0 < t1) {
            return Err(Error::Config("invalid position ranges".into()));
        }
        self.estimator.grid.validate()
    }

    /// Rotation step of the base schedule (4° if it has a single entry).
    fn base_step(&self) -> f64 {
        match self.base_scenario.rotations.as_slice() {
            [a, b, ..] => b.diff(*a),
            _ => 4.0,
        }
    }

    /// Scenario at one axis value (true position still the base one).
    pub fn scenario_at(&self, axis_value: f64) -> Scenario {
        let base = &self.base_scenario;
        match self.axis {
            SweepAxis::Snr => base.with_sigma(snr_to_sigma(axis_value, self.sigma_ref_db)),
            SweepAxis::RotationCount => Scenario {
                rotations: uniform_rotations(self.base_step(), axis_value as usize),
                ..base.clone()
            },
            SweepAxis::DeltaPhi => Scenario {
                rotations: uniform_rotations(axis_value, base.rotations.len()),
                ..base.clone()
            },
        }
    }
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-trial seed.
pub fn split_seed(master: u64, axis_index: u64, trial_index: u64) -> u64 {
    mix(mix(mix(master) ^ axis_index) ^ trial_index)
}

/// Uniform independent `(d, θ)` draws.
pub fn true_position_sampler(
    range_d: (f64, f64),
    range_theta: (f64, f64),
    count: usize,
    seed: u64,
) -> Vec<(f64, AngleDeg)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let d = rng.random_range(range_d.0..range_d.1);
            let t = rng.random_range(range_theta.0..range_theta.1);
            (d, AngleDeg::new(t))
        })
        .collect()
}

/// Squared errors of one method on one trial; `None` if it failed.
pub type TrialError = Option<SquaredError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquaredError {
    /// m².
    pub d: f64,
    /// deg².
    pub theta: f64,
    /// Signed distance error, m.
    pub d_signed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub true_d: f64,
    pub true_theta: f64,
    pub checksum: u64,
    /// One entry per configured method, in configuration order.
    pub errors: Vec<TrialError>,
}

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub method: Method,
    pub mse_d: f64,
    pub se_mse_d: f64,
    pub mse_theta: f64,
    pub se_mse_theta: f64,
    pub bias_d: f64,
    pub crlb_d: f64,
    pub crlb_theta_deg2: f64,
    pub fail_rate: f64,
    pub trials_ok: usize,
}

/// Per-axis-value context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisInfo {
    pub axis_value: f64,
    pub sigma_db: f64,
    pub snr_db: f64,
    pub rotation_count: usize,
    pub step_deg: f64,
    /// Median over the trial positions; the mean is dominated by bearings
    /// next to a pattern null, where the log-slope diverges.
    pub median_g_variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub methods: Vec<Method>,
    pub rows: Vec<SweepRow>,
    pub axis_info: Vec<AxisInfo>,
    /// `records[axis_index][trial_index]`.
    pub records: Vec<Vec<TrialRecord>>,
}

pub const SWEEP_CSV_HEADER: &str =
    "axis_value,method,mse_d_m2,se_mse_d,mse_theta_deg2,se_mse_theta,bias_d_m,crlb_d_m2,crlb_theta_deg2,fail_rate";

pub const AXIS_CSV_HEADER: &str = "axis_value,snr_db,sigma_db,rotation_count,step_deg,g_variance";

impl SweepResult {
    pub fn row(&self, axis_value: f64, method: Method) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.axis_value == axis_value && r.method == method)
    }

    /// Rows of one method in axis order.
    pub fn series(&self, method: Method) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.method == method).collect()
    }

    /// Per-trial `(d², θ²)` errors of `method` at an axis index, with
    /// failures as `None`.
    pub fn trial_errors(&self, axis_index: usize, method: Method) -> Vec<TrialError> {
        let Some(slot) = self.methods.iter().position(|&m| m == method) else {
            return Vec::new();
        };
        self.records[axis_index].iter().map(|r| r.errors[slot]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{SWEEP_CSV_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.axis_value,
                r.method,
                r.mse_d,
                r.se_mse_d,
                r.mse_theta,
                r.se_mse_theta,
                r.bias_d,
                r.crlb_d,
                r.crlb_theta_deg2,
                r.fail_rate
            );
        }
        out
    }

    pub fn axis_csv(&self) -> String {
        let mut out = format!("{AXIS_CSV_HEADER}\n");
        for a in &self.axis_info {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                a.axis_value, a.snr_db, a.sigma_db, a.rotation_count, a.step_deg, a.median_g_variance
            );
        }
        out
    }
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn trial_position(config: &SweepConfig, trial: usize) -> (f64, AngleDeg) {
    match config.position_mode {
        PositionMode::Fixed => (config.base_scenario.true_d, config.base_scenario.true_theta),
        PositionMode::Sampled => {
            let seed = split_seed(config.master_seed, POSITION_STREAM, trial as u64);
            true_position_sampler(config.d_range, config.theta_range, 1, seed)[0]
        }
    }
}

struct TrialOutcome {
    record: TrialRecord,
    crlb: Option<(f64, f64)>,
    g_variance: Option<f64>,
}

fn run_trial(config: &SweepConfig, scenario: &Scenario, axis_index: usize, trial: usize) -> Result<TrialOutcome> {
    let (d, theta) = trial_position(config, trial);
    let at = scenario.with_position(d, theta);
    let seed = split_seed(config.master_seed, axis_index as u64, trial as u64);
    let measurements = sample_measurements(&at, seed)?;
    let knowns = Knowns::from_scenario(&at)?;
    let sigma = Some(at.sigma_db);
    let errors = config
        .methods
        .iter()
        .map(|&m| {
            estimate(m, &measurements, &knowns, sigma, &config.estimator)
                .ok()
                .map(|e| {
                    let dd = e.d_hat - d;
                    let dt = e.theta_hat - theta.degrees();
                    SquaredError {
                        d: dd * dd,
                        theta: dt * dt,
                        d_signed: dd,
                    }
                })
        })
        .collect();
    let crlb = if at.sigma_db == 0.0 {
        Some((0.0, 0.0))
    } else {
        CrlbReport::compute(&at, d, theta, &BiasModel::Analytic)
            .ok()
            .map(|r| (r.crlb_d(), r.crlb_theta_deg2()))
    };
    Ok(TrialOutcome {
        record: TrialRecord {
            true_d: d,
            true_theta: theta.degrees(),
            checksum: measurements.checksum(),
            errors,
        },
        crlb,
        g_variance: crate::bounds::g_variance(&at, theta).ok(),
    })
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs the sweep on the global rayon pool.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut axis_info = Vec::new();
    let mut records = Vec::new();

    for (axis_index, &axis_value) in config.axis_values.iter().enumerate() {
        let scenario = config.scenario_at(axis_value);
        scenario.validate()?;
        let outcomes: Vec<TrialOutcome> = (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, &scenario, axis_index, t))
            .collect::<Result<_>>()?;

        let crlbs: Vec<(f64, f64)> = outcomes.iter().filter_map(|o| o.crlb).collect();
        let crlb_d = mean_of(crlbs.iter().map(|c| c.0));
        let crlb_theta = mean_of(crlbs.iter().map(|c| c.1));

        for (slot, &method) in config.methods.iter().enumerate() {
            let ok: Vec<SquaredError> = outcomes.iter().filter_map(|o| o.record.errors[slot]).collect();
            let failures = config.trials - ok.len();
            if 2 * failures > config.trials {
                return Err(Error::TooManyFailures {
                    axis_value,
                    failures,
                    trials: config.trials,
                });
            }
            let (mse_d, se_mse_d) = mean_se(&ok.iter().map(|e| e.d).collect::<Vec<_>>());
            let (mse_theta, se_mse_theta) = mean_se(&ok.iter().map(|e| e.theta).collect::<Vec<_>>());
            rows.push(SweepRow {
                axis_value,
                method,
                mse_d,
                se_mse_d,
                mse_theta,
                se_mse_theta,
                bias_d: mean_of(ok.iter().map(|e| e.d_signed)),
                crlb_d,
                crlb_theta_deg2: crlb_theta,
                fail_rate: failures as f64 / config.trials as f64,
                trials_ok: ok.len(),
            });
        }

        let step = match scenario.rotations.as_slice() {
            [a, b, ..] => b.diff(*a),
            _ => 0.0,
        };
        axis_info.push(AxisInfo {
            axis_value,
            sigma_db: scenario.sigma_db,
            // report the configured SNR exactly rather than round-tripping it
            snr_db: if config.axis == SweepAxis::Snr {
                axis_value
            } else if scenario.sigma_db > 0.0 {
                20.0 * (config.sigma_ref_db / scenario.sigma_db).log10()
            } else {
                f64::INFINITY
            },
            rotation_count: scenario.rotations.len(),
            step_deg: step,
            median_g_variance: median(outcomes.iter().filter_map(|o| o.g_variance).collect()),
        });
        records.push(outcomes.into_iter().map(|o| o.record).collect());
    }

    Ok(SweepResult {
        axis: config.axis,
        methods: config.methods.clone(),
        rows,
        axis_info,
        records,
    })
}

/// Runs the sweep on a dedicated pool of `jobs` threads (0 = rayon default).
pub fn run_sweep_with_jobs(config: &SweepConfig, jobs: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_sweep(config))
}
