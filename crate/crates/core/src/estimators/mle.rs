//! Gaussian maximum likelihood in the dB domain.
//!
//! `ln L(d, θ) = -(N/2)·ln(2πσ²) - (1/2σ²)·Σ (Rᵢ - Mᵢ(d, θ))²` with
//! `Mᵢ = 30 + 10·log10(A²·G_T(θ + Δφᵢ)·G_R / dⁿ)`.
//!
//! Setting `∂ln L/∂d = 0` forces the residuals to sum to zero, which gives
//! `d̂(θ)` in closed form (the geometric mean of the target-curve distances
//! at θ). Substituting it back leaves a one-dimensional profile in θ that
//! does not involve the true distance at all.

use std::f64::consts::{LN_10, PI};

use crate::channel::{model_rssi_dbm, MeasurementSet};
use crate::error::{Error, Result};
use crate::patterns::AngleDeg;
use crate::solver::{maximize_1d, maximize_2d, GridSpec};

use super::{is_flat, require_directional, require_samples, Estimate, Knowns, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MleSearch {
    /// Line search over θ with `d̂(θ)` in closed form.
    #[default]
    Profile,
    /// Full grid search over `(d, θ)`.
    Joint,
}

pub fn log_likelihood(
    measurements: &MeasurementSet,
    d: f64,
    theta_deg: f64,
    knowns: &Knowns,
    sigma_db: f64,
) -> Result<f64> {
    let n = measurements.len() as f64;
    let ss = sum_sq_residuals(measurements, d, theta_deg, knowns)?;
    Ok(-0.5 * n * (2.0 * PI * sigma_db * sigma_db).ln() - ss / (2.0 * sigma_db * sigma_db))
}

fn sum_sq_residuals(measurements: &MeasurementSet, d: f64, theta_deg: f64, knowns: &Knowns) -> Result<f64> {
    let mut ss = 0.0;
    for s in &measurements.samples {
        let g_t = knowns.tx_pattern.gain(AngleDeg::new(theta_deg + s.delta_phi.degrees()))?;
        let r = s.rssi_dbm - model_rssi_dbm(knowns.a_squared, g_t, knowns.rx_gain, knowns.path_loss_n, d);
        ss += r * r;
    }
    Ok(ss)
}

/// Gradient of the log-likelihood: `(∂/∂d [1/m], ∂/∂θ [1/rad])`.
pub fn score(
    measurements: &MeasurementSet,
    d: f64,
    theta_deg: f64,
    knowns: &Knowns,
    sigma_db: f64,
) -> Result<(f64, f64)> {
    let dm_dd = -10.0 * knowns.path_loss_n / (d * LN_10);
    let (mut sd, mut st) = (0.0, 0.0);
    for s in &measurements.samples {
        let phi = AngleDeg::new(theta_deg + s.delta_phi.degrees());
        let g_t = knowns.tx_pattern.gain(phi)?;
        let k = 10.0 / LN_10 * knowns.tx_pattern.log_gain_slope(phi)?;
        let r = s.rssi_dbm - model_rssi_dbm(knowns.a_squared, g_t, knowns.rx_gain, knowns.path_loss_n, d);
        sd += r * dm_dd;
        st += r * k;
    }
    let var = sigma_db * sigma_db;
    Ok((sd / var, st / var))
}

/// Residuals `Rᵢ - 10·log10 G_T(θ + Δφᵢ)`; their mean fixes `d̂(θ)` and
/// their spread is the profile objective.
fn offsets(measurements: &MeasurementSet, knowns: &Knowns, theta_deg: f64) -> Result<Vec<f64>> {
    measurements
        .samples
        .iter()
        .map(|s| {
            let g = knowns.tx_pattern.gain(AngleDeg::new(theta_deg + s.delta_phi.degrees()))?;
            Ok(s.rssi_dbm - 10.0 * g.log10())
        })
        .collect()
}

/// Closed-form maximum-likelihood distance for a fixed bearing.
pub fn profile_distance(measurements: &MeasurementSet, knowns: &Knowns, theta_deg: f64) -> Result<f64> {
    let y = offsets(measurements, knowns, theta_deg)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let log10_d = (30.0 + 10.0 * (knowns.a_squared * knowns.rx_gain).log10() - mean) / (10.0 * knowns.path_loss_n);
    Ok(10f64.powf(log10_d))
}

/// Sum of squared centred offsets: `Σ (Rᵢ - M̂ᵢ)²` at `(d̂(θ), θ)`.
fn profile_sse(measurements: &MeasurementSet, knowns: &Knowns, theta_deg: f64) -> Result<f64> {
    let y = offsets(measurements, knowns, theta_deg)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    Ok(y.iter().map(|v| (v - mean) * (v - mean)).sum())
}

/// Bearing derivative of the profile objective up to a positive factor:
/// `Σ (yᵢ - ȳ)·Kᵢ`, which is positive where the fit improves with θ.
fn profile_gradient(measurements: &MeasurementSet, knowns: &Knowns, theta_deg: f64) -> Result<f64> {
    let y = offsets(measurements, knowns, theta_deg)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut g = 0.0;
    for (s, yi) in measurements.samples.iter().zip(&y) {
        let k = knowns.tx_pattern.log_gain_slope(AngleDeg::new(theta_deg + s.delta_phi.degrees()))?;
        g += (yi - mean) * k;
    }
    Ok(g)
}

/// Polishes a grid optimum by bisecting the profile score equation.
///
/// Near the maximum the objective is flat to within rounding over a band of
/// width ~√ε, so the grid alone leaves θ̂ jittering with anything that
/// perturbs the rounding (such as the true distance). The score crosses
/// zero cleanly, so bisection pins the root to machine precision. Falls back
/// to the grid point when no bracket up to `max_half` holds a sign change.
fn polish_bearing(measurements: &MeasurementSet, knowns: &Knowns, theta: f64, max_half: f64, range: (f64, f64)) -> f64 {
    let grad = |x: f64| profile_gradient(measurements, knowns, x).ok();
    // widen a bracket around the grid point until the score falls through zero
    let mut half = max_half * 2f64.powi(-30);
    let bracket = loop {
        let (a, b) = ((theta - half).max(range.0), (theta + half).min(range.1));
        match (grad(a), grad(b)) {
            (Some(ga), Some(gb)) if ga > 0.0 && gb < 0.0 => break Some((a, b)),
            (Some(_), Some(_)) if half < max_half => half *= 2.0,
            _ => break None,
        }
    };
    let Some((mut a, mut b)) = bracket else {
        return theta;
    };
    loop {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            return mid;
        }
        match grad(mid) {
            Some(g) if g > 0.0 => a = mid,
            Some(_) => b = mid,
            None => return theta,
        }
    }
}

/// Maximum-likelihood position. Residual is the RMS fit residual in dB.
pub fn estimate_mle(
    measurements: &MeasurementSet,
    knowns: &Knowns,
    sigma_db: f64,
    grid: &GridSpec,
    search: MleSearch,
) -> Result<Estimate> {
    require_samples(measurements, 2)?;
    require_directional(&knowns.tx_pattern, "likelihood with an omnidirectional pattern")?;
    // σ scales the likelihood but not its maximiser; it only has to be valid.
    if !(sigma_db.is_finite() && sigma_db >= 0.0) {
        return Err(Error::Config(format!("MLE needs a non-negative sigma, got {sigma_db}")));
    }

    let (d_hat, theta_hat, evaluations) = match search {
        MleSearch::Profile => {
            let opt = maximize_1d(
                |theta| profile_sse(measurements, knowns, theta).map_or(f64::NEG_INFINITY, |v| -v),
                &grid.theta_line(),
            )?;
            if is_flat(opt.coarse_spread, opt.value) {
                return Err(Error::Degenerate("likelihood is flat in bearing"));
            }
            let line = grid.theta_line();
            let spacing = (line.range.1 - line.range.0) / (line.coarse_steps - 1) as f64;
            let theta = polish_bearing(measurements, knowns, opt.x, spacing, line.range);
            (profile_distance(measurements, knowns, theta)?, theta, opt.evaluations)
        }
        MleSearch::Joint => {
            let opt = maximize_2d(
                |d, theta| sum_sq_residuals(measurements, d, theta, knowns).map_or(f64::NEG_INFINITY, |v| -v),
                grid,
            )?;
            (opt.d, opt.theta, opt.evaluations)
        }
    };

    let sse = profile_sse(measurements, knowns, theta_hat)?;
    Ok(Estimate {
        d_hat,
        theta_hat,
        method: Method::Mle,
        residual: (sse / measurements.len() as f64).sqrt(),
        count: evaluations,
    })
}

/// Score equations at an estimate in dB units: the mean residual (distance
/// equation) and `Σ rᵢ·Kᵢ / sqrt(N·Σ Kᵢ²)` (bearing equation). Both vanish
/// at an interior maximum.
pub fn stationarity(measurements: &MeasurementSet, knowns: &Knowns, estimate: &Estimate) -> Result<(f64, f64)> {
    let n = measurements.len() as f64;
    let (mut sum_r, mut sum_rk, mut sum_kk) = (0.0, 0.0, 0.0);
    for s in &measurements.samples {
        let phi = AngleDeg::new(estimate.theta_hat + s.delta_phi.degrees());
        let g_t = knowns.tx_pattern.gain(phi)?;
        let k = 10.0 / LN_10 * knowns.tx_pattern.log_gain_slope(phi)?;
        let r = s.rssi_dbm
            - model_rssi_dbm(knowns.a_squared, g_t, knowns.rx_gain, knowns.path_loss_n, estimate.d_hat);
        sum_r += r;
        sum_rk += r * k;
        sum_kk += k * k;
    }
    let bearing = if sum_kk > 0.0 { sum_rk / (n * sum_kk).sqrt() } else { 0.0 };
    Ok((sum_r / n, bearing))
}
