use crate::channel::MeasurementSet;
use crate::error::{Error, Result};
use crate::solver::{maximize_1d, GridSpec};

use super::{is_flat, require_directional, require_samples, Estimate, Knowns, Method};

/// Solves the `N` target-curve equations as a least-squares consistency
/// problem: find θ minimizing `Σ (dᵢ(θ) - d̄(θ))²`, return `(d̄(θ*), θ*)`.
///
/// Under noise the system is overdetermined and has no exact root; this
/// picks the bearing where the per-sample distances agree best. Residual is
/// the minimized sum of squares (m²).
pub fn estimate_eqsolve(measurements: &MeasurementSet, knowns: &Knowns, grid: &GridSpec) -> Result<Estimate> {
    require_samples(measurements, 2)?;
    require_directional(&knowns.tx_pattern, "equation solving with an omnidirectional pattern")?;

    let spread_at = |theta: f64| -> Result<(f64, f64)> {
        let mut ds = Vec::with_capacity(measurements.len());
        for s in &measurements.samples {
            ds.push(knowns.curve_distance(theta, s.delta_phi, s.rssi_dbm)?);
        }
        let mean = ds.iter().sum::<f64>() / ds.len() as f64;
        let ss = ds.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>();
        Ok((ss, mean))
    };

    let opt = maximize_1d(
        |theta| match spread_at(theta) {
            Ok((ss, _)) => -ss,
            Err(_) => f64::NEG_INFINITY,
        },
        &grid.theta_line(),
    )?;
    if is_flat(opt.coarse_spread, opt.value) {
        return Err(Error::Degenerate("equation solving: curves agree at every bearing"));
    }
    let (ss, d_hat) = spread_at(opt.x)?;
    Ok(Estimate {
        d_hat,
        theta_hat: opt.x,
        method: Method::EqSolve,
        residual: ss,
        count: opt.evaluations,
    })
}
