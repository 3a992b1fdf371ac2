//! Bearing estimation when the receiver gain is unknown.
//!
//! Differencing every sample against the un-rotated reference cancels the
//! receiver gain, the transmit power and the path loss, leaving only the
//! transmit-pattern ratio `G_T(θ + Δφ)/G_T(θ)`. Matching that ratio against
//! the known pattern yields θ; a second bearing taken after moving the
//! transmitter along a known baseline then fixes the distance by
//! triangulation.

use crate::channel::MeasurementSet;
use crate::error::{Error, Result};
use crate::patterns::{AngleDeg, RadiationPattern};
use crate::solver::{maximize_1d, LineSpec};

use super::{is_flat, require_directional};

/// Rotations closer than this to zero count as the reference sample.
const REFERENCE_TOL_DEG: f64 = 1e-9;

/// Sinuses of the bearing gap below this make the triangle degenerate.
const MIN_SIN_GAP: f64 = 1e-6;

/// Gain ratios of each rotated sample relative to the reference sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GainRatioCurve {
    /// `(Δφ, ratio)` in measurement order; the reference has ratio 1.
    pub points: Vec<(AngleDeg, f64)>,
}

impl GainRatioCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Ratios in dB.
    pub fn ratios_db(&self) -> Vec<f64> {
        self.points.iter().map(|&(_, r)| 10.0 * r.log10()).collect()
    }
}

pub fn gain_ratio_curve(measurements: &MeasurementSet) -> Result<GainRatioCurve> {
    let reference = measurements
        .samples
        .iter()
        .find(|s| s.delta_phi.degrees().abs() < REFERENCE_TOL_DEG)
        .ok_or(Error::MissingReference)?;
    let points = measurements
        .samples
        .iter()
        .map(|s| (s.delta_phi, 10f64.powf((s.rssi_dbm - reference.rssi_dbm) / 10.0)))
        .collect();
    Ok(GainRatioCurve { points })
}

/// How a measured ratio curve is compared with the pattern template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimilarityMode {
    /// Sum of squared dB differences (minimised).
    #[default]
    LeastSquares,
    /// Pearson correlation of the dB curves (maximised).
    Correlation,
}

impl std::str::FromStr for SimilarityMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "least_squares" | "least-squares" | "ls" => Ok(SimilarityMode::LeastSquares),
            "correlation" | "corr" => Ok(SimilarityMode::Correlation),
            _ => Err(Error::Config(format!("unknown similarity mode {s:?} (least_squares, correlation)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityFit {
    /// Degrees.
    pub theta: f64,
    /// RMS dB mismatch (least squares) or `1 - ρ` (correlation).
    pub residual: f64,
    pub evaluations: usize,
}

/// Template ratios `10·log10(G_T(θ + Δφᵢ)/G_T(θ))`.
fn template_db(curve: &GainRatioCurve, pattern: &RadiationPattern, theta_deg: f64) -> Result<Vec<f64>> {
    let base = pattern.gain_db(AngleDeg::new(theta_deg))?;
    curve
        .points
        .iter()
        .map(|&(dphi, _)| Ok(pattern.gain_db(AngleDeg::new(theta_deg + dphi.degrees()))? - base))
        .collect()
}

fn sum_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Bearing whose pattern template best matches the measured ratios.
pub fn estimate_theta_similarity(
    curve: &GainRatioCurve,
    pattern: &RadiationPattern,
    line: &LineSpec,
    mode: SimilarityMode,
) -> Result<SimilarityFit> {
    if curve.len() < 2 {
        return Err(Error::Underdetermined {
            needed: 2,
            got: curve.len(),
        });
    }
    require_directional(pattern, "similarity with an omnidirectional pattern")?;
    let measured = curve.ratios_db();
    let score = |theta: f64| -> f64 {
        let Ok(t) = template_db(curve, pattern, theta) else {
            return f64::NEG_INFINITY;
        };
        match mode {
            SimilarityMode::LeastSquares => -sum_sq_diff(&measured, &t),
            SimilarityMode::Correlation => pearson(&measured, &t),
        }
    };
    let opt = maximize_1d(score, line)?;
    if is_flat(opt.coarse_spread, opt.value) {
        return Err(Error::Degenerate("gain-ratio curve matches every bearing"));
    }
    let residual = match mode {
        SimilarityMode::LeastSquares => (-opt.value / curve.len() as f64).sqrt(),
        SimilarityMode::Correlation => 1.0 - opt.value,
    };
    Ok(SimilarityFit {
        theta: opt.x,
        residual,
        evaluations: opt.evaluations,
    })
}

/// Triangulates distances from bearings taken before (`theta0_deg`) and
/// after (`theta1_deg`) moving the transmitter `baseline_m` along its 0° axis.
pub fn two_position_fix(theta0_deg: f64, theta1_deg: f64, baseline_m: f64) -> Result<(f64, f64)> {
    if !(baseline_m.is_finite() && baseline_m > 0.0) {
        return Err(Error::InvalidScenario(format!("baseline must be positive, got {baseline_m}")));
    }
    let sin_gap = (theta1_deg - theta0_deg).to_radians().sin();
    if sin_gap.abs() < MIN_SIN_GAP {
        return Err(Error::DegenerateBaseline { sin_gap });
    }
    let d0 = theta1_deg.to_radians().sin() * baseline_m / sin_gap;
    let d1 = theta0_deg.to_radians().sin() * baseline_m / sin_gap;
    Ok((d0, d1))
}

/// Full unknown-receiver solution from two measurement sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPositionFix {
    pub theta0: SimilarityFit,
    pub theta1: SimilarityFit,
    pub d0: f64,
    pub d1: f64,
}

/// Runs the similarity search at both transmitter positions and triangulates.
pub fn locate_unknown_receiver(
    first: &MeasurementSet,
    second: &MeasurementSet,
    pattern: &RadiationPattern,
    line: &LineSpec,
    mode: SimilarityMode,
    baseline_m: f64,
) -> Result<TwoPositionFix> {
    let theta0 = estimate_theta_similarity(&gain_ratio_curve(first)?, pattern, line, mode)?;
    let theta1 = estimate_theta_similarity(&gain_ratio_curve(second)?, pattern, line, mode)?;
    let (d0, d1) = two_position_fix(theta0.theta, theta1.theta, baseline_m)?;
    if !(d0 > 0.0 && d1 > 0.0) {
        return Err(Error::Degenerate("bearings place the receiver behind the baseline"));
    }
    Ok(TwoPositionFix { theta0, theta1, d0, d1 })
}
