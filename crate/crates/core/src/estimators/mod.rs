//! Position estimators.
//!
//! With a known receiver gain, every RSSI sample defines a *target curve*
//! `d(θ)`: the distances consistent with that sample if the receiver sat at
//! bearing θ. Three estimators combine the curves differently:
//!
//! - [`estimate_eqsolve`]: least-squares consistency of the `N` curves,
//! - [`estimate_cid`]: averaged pairwise curve intersections,
//! - [`estimate_mle`]: Gaussian maximum likelihood, searched as a profile
//!   over θ with the distance in closed form.
//!
//! Without the receiver gain, [`gain_ratio_curve`] and
//! [`estimate_theta_similarity`] recover the bearing from RSSI differences,
//! and [`two_position_fix`] triangulates the distance from two bearings.

mod cid;
mod eqsolve;
mod mle;
mod similarity;

use std::fmt::Write as _;
use std::str::FromStr;

pub use cid::estimate_cid;
pub use eqsolve::estimate_eqsolve;
pub use mle::{estimate_mle, log_likelihood, profile_distance, score, stationarity, MleSearch};
pub use similarity::{
    estimate_theta_similarity, gain_ratio_curve, locate_unknown_receiver, two_position_fix,
    GainRatioCurve, SimilarityFit, SimilarityMode, TwoPositionFix,
};

use crate::channel::{MeasurementSet, Scenario};
use crate::error::{Error, Result};
use crate::patterns::{AngleDeg, PatternKind, RadiationPattern};
use crate::solver::{GridSpec, LineSpec, Polyline, DEFAULT_TOUCH_TOL};

/// Default CID outlier gate, in robust standard deviations.
pub const DEFAULT_CID_GATE: f64 = 3.0;

/// Default extension of the CID curve sampling beyond the search range, degrees.
pub const DEFAULT_CID_MARGIN_DEG: f64 = 10.0;

/// What the receiver side knows about the link.
#[derive(Debug, Clone, PartialEq)]
pub struct Knowns {
    /// `P_T·λ²/(4π)²` with `P_T` in watts.
    pub a_squared: f64,
    pub path_loss_n: f64,
    pub tx_pattern: RadiationPattern,
    /// Linear receiver gain at the fixed reception angle.
    pub rx_gain: f64,
}

impl Knowns {
    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        Ok(Knowns {
            a_squared: scenario.a_squared(),
            path_loss_n: scenario.path_loss_n,
            tx_pattern: scenario.tx_pattern.clone(),
            rx_gain: scenario.rx_gain()?,
        })
    }

    /// Distance on the target curve of one sample at bearing `theta_deg`.
    pub fn curve_distance(&self, theta_deg: f64, delta_phi: AngleDeg, rssi_dbm: f64) -> Result<f64> {
        let g_t = self.tx_pattern.gain(AngleDeg::new(theta_deg + delta_phi.degrees()))?;
        let log10_d = (30.0 + 10.0 * (self.a_squared * g_t * self.rx_gain).log10() - rssi_dbm)
            / (10.0 * self.path_loss_n);
        Ok(10f64.powf(log10_d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    EqSolve,
    Cid,
    Mle,
    Similarity,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::EqSolve, Method::Cid, Method::Mle, Method::Similarity];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::EqSolve => "eqsolve",
            Method::Cid => "cid",
            Method::Mle => "mle",
            Method::Similarity => "similarity",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown method {s:?} (eqsolve, cid, mle, similarity)")))
    }
}

/// Estimated position plus solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    /// Metres, always positive.
    pub d_hat: f64,
    /// Degrees.
    pub theta_hat: f64,
    pub method: Method,
    /// Method-specific fit residual (see each estimator).
    pub residual: f64,
    /// Intersections retained (CID) or objective evaluations (others).
    pub count: usize,
}

/// Tuning shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub grid: GridSpec,
    /// Target-curve sampling step for CID, degrees.
    pub theta_step_deg: f64,
    /// Curves closer than this (metres) at a vertex are touching.
    pub touch_tol_m: f64,
    /// CID outlier gate in robust standard deviations (`∞` disables).
    pub cid_outlier_mad: f64,
    /// Target curves for CID are sampled this far beyond each end of the
    /// bearing search range (degrees), so a receiver near the edge still
    /// gets the crossings that scatter to the outside.
    pub cid_margin_deg: f64,
    pub mle_search: MleSearch,
    pub similarity: SimilarityMode,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            grid: GridSpec::default(),
            theta_step_deg: 0.1,
            touch_tol_m: DEFAULT_TOUCH_TOL,
            cid_outlier_mad: DEFAULT_CID_GATE,
            cid_margin_deg: DEFAULT_CID_MARGIN_DEG,
            mle_search: MleSearch::Profile,
            similarity: SimilarityMode::LeastSquares,
        }
    }
}

impl EstimatorConfig {
    pub fn theta_line(&self) -> LineSpec {
        self.grid.theta_line()
    }

    /// θ samples for CID target curves: the search range widened by
    /// `cid_margin_deg` on both sides, every `theta_step_deg`.
    pub fn theta_samples(&self) -> Vec<f64> {
        let (lo, hi) = self.grid.theta_range;
        theta_samples((lo - self.cid_margin_deg, hi + self.cid_margin_deg), self.theta_step_deg)
    }
}

pub fn theta_samples(range: (f64, f64), step_deg: f64) -> Vec<f64> {
    let (lo, hi) = range;
    let n = ((hi - lo) / step_deg + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=n).map(|k| lo + step_deg * k as f64).collect();
    if hi - out[out.len() - 1] > 1e-9 * step_deg {
        out.push(hi);
    } else {
        *out.last_mut().unwrap() = hi;
    }
    out
}

/// Target curve `d(θ)` for one sample, unknown shadowing set to zero.
///
/// Bearings where the transmit pattern has no support (dipole nulls, beyond
/// a table) are left out of the curve.
pub fn target_curve(delta_phi: AngleDeg, rssi_dbm: f64, knowns: &Knowns, theta_grid: &[f64]) -> Result<Polyline> {
    let mut vertices = Vec::with_capacity(theta_grid.len());
    for &theta in theta_grid {
        match knowns.curve_distance(theta, delta_phi, rssi_dbm) {
            Ok(d) => vertices.push((theta, d)),
            Err(Error::OutOfSupport { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Polyline::new(vertices)
}

pub(crate) fn require_samples(measurements: &MeasurementSet, needed: usize) -> Result<()> {
    if measurements.len() < needed {
        return Err(Error::Underdetermined {
            needed,
            got: measurements.len(),
        });
    }
    Ok(())
}

pub(crate) fn require_directional(pattern: &RadiationPattern, what: &'static str) -> Result<()> {
    if pattern.kind() == PatternKind::Omnidirectional {
        return Err(Error::Degenerate(what));
    }
    Ok(())
}

/// A coarse scan whose values barely move means the bearing is unobservable.
pub(crate) fn is_flat(spread: f64, best: f64) -> bool {
    spread <= 1e-12 * (1.0 + best.abs())
}

/// Runs one of the known-receiver estimators.
pub fn estimate(
    method: Method,
    measurements: &MeasurementSet,
    knowns: &Knowns,
    sigma_db: Option<f64>,
    config: &EstimatorConfig,
) -> Result<Estimate> {
    match method {
        Method::EqSolve => estimate_eqsolve(measurements, knowns, &config.grid),
        Method::Cid => estimate_cid(
            measurements,
            knowns,
            &config.theta_samples(),
            config.touch_tol_m,
            config.cid_outlier_mad,
        ),
        Method::Mle => {
            let sigma = sigma_db.ok_or_else(|| Error::Config("MLE needs the shadowing sigma".into()))?;
            estimate_mle(measurements, knowns, sigma, &config.grid, config.mle_search)
        }
        Method::Similarity => {
            let curve = gain_ratio_curve(measurements)?;
            let fit = estimate_theta_similarity(&curve, &knowns.tx_pattern, &config.theta_line(), config.similarity)?;
            let d_hat = profile_distance(measurements, knowns, fit.theta)?;
            Ok(Estimate {
                d_hat,
                theta_hat: fit.theta,
                method: Method::Similarity,
                residual: fit.residual,
                count: fit.evaluations,
            })
        }
    }
}

/// `trial,method,d_hat_m,theta_hat_deg,residual`.
pub fn estimates_to_csv(rows: &[(usize, Estimate)]) -> String {
    let mut out = String::from("trial,method,d_hat_m,theta_hat_deg,residual\n");
    for (trial, e) in rows {
        let _ = writeln!(out, "{trial},{},{},{},{}", e.method, e.d_hat, e.theta_hat, e.residual);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{mean_rssi, sample_measurements};

    #[test]
    fn theta_samples_cover_range() {
        let s = theta_samples((-70.0, 70.0), 0.1);
        assert_eq!(s.len(), 1401);
        assert_eq!(s[0], -70.0);
        assert_eq!(*s.last().unwrap(), 70.0);
        let s = theta_samples((0.0, 1.0), 0.3);
        assert_eq!(s.len(), 5);
        assert_eq!(s[4], 1.0);
    }

    #[test]
    fn noiseless_curve_passes_through_truth() {
        let scenario = Scenario::reference().with_sigma(0.0).with_position(2.0, AngleDeg::new(10.0));
        let knowns = Knowns::from_scenario(&scenario).unwrap();
        let m = sample_measurements(&scenario, 0).unwrap();
        for s in &m.samples {
            let curve = target_curve(s.delta_phi, s.rssi_dbm, &knowns, &[9.0, 10.0, 11.0]).unwrap();
            let d = curve.eval(10.0).unwrap();
            assert!((d - 2.0).abs() < 1e-9, "{d}");
        }
    }

    #[test]
    fn inversion_recovers_distance_relative() {
        for d0 in [0.5, 1.3, 4.9, 17.0] {
            let scenario = Scenario::reference().with_position(d0, AngleDeg::new(-33.0));
            let knowns = Knowns::from_scenario(&scenario).unwrap();
            let r = mean_rssi(&scenario, AngleDeg::new(12.0)).unwrap();
            let d = knowns.curve_distance(-33.0, AngleDeg::new(12.0), r).unwrap();
            assert!(((d - d0) / d0).abs() < 1e-9);
        }
    }

    #[test]
    fn omni_curve_is_flat() {
        let mut scenario = Scenario::reference();
        scenario.tx_pattern = RadiationPattern::omnidirectional(1.0).unwrap();
        let knowns = Knowns::from_scenario(&scenario).unwrap();
        let curve = target_curve(AngleDeg::new(4.0), -40.0, &knowns, &theta_samples((-70.0, 70.0), 1.0)).unwrap();
        let d0 = curve.vertices()[0].1;
        assert!(curve.vertices().iter().all(|v| v.1 == d0));
    }

    #[test]
    fn curve_skips_pattern_nulls() {
        let scenario = Scenario::reference();
        let knowns = Knowns::from_scenario(&scenario).unwrap();
        // θ + 20° hits the dipole null at 90°
        let curve = target_curve(AngleDeg::new(20.0), -40.0, &knowns, &[60.0, 70.0, 80.0]).unwrap();
        assert_eq!(curve.vertices().len(), 2);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("ls".parse::<Method>().is_err());
    }
}
