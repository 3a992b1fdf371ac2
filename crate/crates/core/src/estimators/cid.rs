use crate::channel::MeasurementSet;
use crate::error::{Error, Result};
use crate::solver::{intersect_polylines_with_tol, Polyline};

use super::{require_directional, require_samples, target_curve, Estimate, Knowns, Method};

/// Curve intersection detection.
///
/// Builds one target curve per sample over `theta_grid`, intersects every
/// pair, and averages the retained crossings component-wise.
///
/// Retention: a reference point is chosen among all crossings as the one
/// the curves agree with best (least median log-distance residual over all
/// curves). A pair that crosses once contributes its crossing; a pair that
/// crosses several times contributes the crossing closest to the reference
/// (θ scaled by the grid span, d by the reference distance). Retained points
/// further than `outlier_mad` robust standard deviations (1.4826·MAD about
/// the reference) in either coordinate are then dropped; pass `f64::INFINITY`
/// to keep them. Near pattern nulls, and where rotations reach the back lobe,
/// two curves can cross far from the truth; these rules discard such
/// crossings. Coincident pairs are skipped.
///
/// Residual is the standard deviation of the retained θ values (degrees);
/// `count` is the number of retained points.
pub fn estimate_cid(
    measurements: &MeasurementSet,
    knowns: &Knowns,
    theta_grid: &[f64],
    touch_tol_m: f64,
    outlier_mad: f64,
) -> Result<Estimate> {
    require_samples(measurements, 2)?;
    require_directional(&knowns.tx_pattern, "curve intersection with an omnidirectional pattern")?;

    let curves = measurements
        .samples
        .iter()
        .map(|s| target_curve(s.delta_phi, s.rssi_dbm, knowns, theta_grid))
        .collect::<Result<Vec<Polyline>>>()?;

    let mut singles: Vec<(f64, f64)> = Vec::new();
    let mut multiples: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut coincident = 0usize;
    let mut pairs = 0usize;
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            pairs += 1;
            match intersect_polylines_with_tol(&curves[i], &curves[j], touch_tol_m) {
                Ok(pts) if pts.len() == 1 => singles.push(pts[0]),
                Ok(pts) if pts.len() > 1 => multiples.push(pts),
                Ok(_) | Err(Error::NoOverlap) => {}
                Err(Error::DegenerateOverlap) => coincident += 1,
                Err(e) => return Err(e),
            }
        }
    }
    if coincident == pairs {
        return Err(Error::Degenerate("curve intersection: all target curves coincide"));
    }
    if singles.is_empty() && multiples.is_empty() {
        return Err(Error::NoIntersections);
    }

    let candidates: Vec<(f64, f64)> = singles.iter().chain(multiples.iter().flatten()).copied().collect();
    let reference = consensus_point(&candidates, &curves);
    let theta_span = theta_grid[theta_grid.len() - 1] - theta_grid[0];
    let d_scale = reference.1.abs().max(f64::MIN_POSITIVE);
    let distance = |p: &(f64, f64)| {
        let dt = (p.0 - reference.0) / theta_span;
        let dd = (p.1 - reference.1) / d_scale;
        dt * dt + dd * dd
    };

    let mut retained = singles;
    for pts in &multiples {
        let best = pts
            .iter()
            .min_by(|a, b| distance(a).total_cmp(&distance(b)))
            .expect("non-empty");
        retained.push(*best);
    }
    if outlier_mad.is_finite() {
        let step = theta_grid.get(1).map_or(0.0, |t| t - theta_grid[0]);
        gate_outliers(&mut retained, reference, outlier_mad, step);
    }
    let n = retained.len() as f64;
    let theta_hat = retained.iter().map(|p| p.0).sum::<f64>() / n;
    let d_hat = retained.iter().map(|p| p.1).sum::<f64>() / n;
    let theta_sd = (retained.iter().map(|p| (p.0 - theta_hat).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Estimate {
        d_hat,
        theta_hat,
        method: Method::Cid,
        residual: theta_sd,
        count: retained.len(),
    })
}

/// Scale from median absolute deviation to standard deviation under normality.
const MAD_TO_SD: f64 = 1.4826;

/// Crossing that the most curves agree with: the candidate minimising the
/// median, over all curves, of `|ln(dᵢ(θ)/d)|`. At the true position every
/// curve passes close by; at a spurious crossing of two curves the others
/// do not. Ties go to the earliest candidate.
fn consensus_point(candidates: &[(f64, f64)], curves: &[Polyline]) -> (f64, f64) {
    let mut residuals = Vec::with_capacity(curves.len());
    let mut best = (f64::INFINITY, candidates[0]);
    for &(theta, d) in candidates {
        residuals.clear();
        residuals.extend(
            curves
                .iter()
                .map(|c| c.eval(theta).map_or(f64::INFINITY, |di| (di / d).ln().abs())),
        );
        residuals.sort_by(f64::total_cmp);
        let m = residuals.len();
        let score = if m % 2 == 1 {
            residuals[m / 2]
        } else {
            0.5 * (residuals[m / 2 - 1] + residuals[m / 2])
        };
        if score < best.0 {
            best = (score, (theta, d));
        }
    }
    best.1
}

/// Drops points outside `gate` robust standard deviations of `centre`.
/// Limits never fall below one θ grid step (or 10⁻³ of the median distance),
/// so noiseless crossings that differ only by interpolation error survive.
fn gate_outliers(points: &mut Vec<(f64, f64)>, centre: (f64, f64), gate: f64, theta_step: f64) {
    let deviations: Vec<(f64, f64)> = points
        .iter()
        .map(|p| ((p.0 - centre.0).abs(), (p.1 - centre.1).abs()))
        .collect();
    let mad = componentwise_median(&deviations);
    let lim_t = (gate * MAD_TO_SD * mad.0).max(theta_step);
    let lim_d = (gate * MAD_TO_SD * mad.1).max(1e-3 * centre.1.abs());
    points.retain(|p| (p.0 - centre.0).abs() <= lim_t && (p.1 - centre.1).abs() <= lim_d);
}

fn componentwise_median(points: &[(f64, f64)]) -> (f64, f64) {
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    };
    (
        median(points.iter().map(|p| p.0).collect()),
        median(points.iter().map(|p| p.1).collect()),
    )
}
