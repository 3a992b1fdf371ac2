//! Planar antenna gain patterns.
//!
//! Angles cross every public boundary in degrees ([`AngleDeg`]); slopes are
//! reported per radian because that is the unit the Fisher information uses.
//! A pattern can be rotated, which is a pure shift of its argument: the
//! rotated pattern evaluated at `φ` equals the original evaluated at `φ + Δ`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use crate::error::{Error, Result};

/// Peak gain of a half-wave dipole (linear, ≈ 2.15 dBi).
pub const DIPOLE_PEAK_GAIN: f64 = 1.64;

/// Minimum number of samples a tabulated pattern must carry.
pub const MIN_TABLE_SAMPLES: usize = 8;

/// Below this |cos φ| the dipole is treated as sitting on its null.
const DIPOLE_NULL_EPS: f64 = 1e-12;

/// Planar angle in degrees, always normalized to `[-180, 180)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct AngleDeg(f64);

impl AngleDeg {
    pub fn new(deg: f64) -> Self {
        AngleDeg(normalize_deg(deg))
    }

    pub fn from_radians(rad: f64) -> Self {
        Self::new(rad.to_degrees())
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }

    /// Signed shortest difference `self - other`, in `[-180, 180)`.
    pub fn diff(self, other: AngleDeg) -> f64 {
        normalize_deg(self.0 - other.0)
    }
}

impl std::ops::Add for AngleDeg {
    type Output = AngleDeg;
    fn add(self, rhs: AngleDeg) -> AngleDeg {
        AngleDeg::new(self.0 + rhs.0)
    }
}

impl std::fmt::Display for AngleDeg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}°", self.0)
    }
}

/// Wraps any finite angle into `[-180, 180)`.
pub fn normalize_deg(deg: f64) -> f64 {
    let mut r = (deg + 180.0).rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 {
        r = 0.0;
    }
    r - 180.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    AnalyticDipole,
    AnalyticAsymmetric,
    Tabulated,
    Omnidirectional,
}

/// How a tabulated pattern fills in between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Linear in dB (log-gain). Matches the dB-domain channel model.
    #[default]
    LogLinear,
    /// Linear in linear gain.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
struct Table {
    angles_deg: Vec<f64>,
    gains: Vec<f64>,
    ln_gains: Vec<f64>,
    interpolation: Interpolation,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Omnidirectional { gain: f64 },
    Dipole { peak: f64 },
    Asymmetric { peak: f64, epsilon: f64, skew_rad: f64 },
    Tabulated(Table),
}

/// Gain-versus-angle function. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiationPattern {
    shape: Shape,
    offset_deg: f64,
}

impl RadiationPattern {
    pub fn omnidirectional(gain: f64) -> Result<Self> {
        if !(gain.is_finite() && gain > 0.0) {
            return Err(Error::InvalidPattern(format!(
                "omnidirectional gain must be positive, got {gain}"
            )));
        }
        Ok(Self::from_shape(Shape::Omnidirectional { gain }))
    }

    /// E-plane cut of a half-wave dipole with broadside at 0°; nulls at ±90°.
    ///
    /// Symmetric about broadside, so θ and -θ give the same gain.
    pub fn dipole() -> Self {
        Self::from_shape(Shape::Dipole {
            peak: DIPOLE_PEAK_GAIN,
        })
    }

    /// Dipole multiplied by `1 + ε·sin(φ + skew)`, which breaks the
    /// broadside symmetry. `epsilon` must lie in `[0, 0.9]`.
    pub fn asymmetric(epsilon: f64, skew_deg: f64) -> Result<Self> {
        if !(0.0..=0.9).contains(&epsilon) {
            return Err(Error::InvalidPattern(format!(
                "skew epsilon must be in [0, 0.9], got {epsilon}"
            )));
        }
        if !skew_deg.is_finite() {
            return Err(Error::InvalidPattern("skew angle is not finite".into()));
        }
        Ok(Self::from_shape(Shape::Asymmetric {
            peak: DIPOLE_PEAK_GAIN,
            epsilon,
            skew_rad: skew_deg.to_radians(),
        }))
    }

    /// Builds a tabulated pattern from `(angle_deg, linear_gain)` samples.
    pub fn tabulated(samples: &[(f64, f64)], interpolation: Interpolation) -> Result<Self> {
        if samples.len() < MIN_TABLE_SAMPLES {
            return Err(Error::InvalidPattern(format!(
                "tabulated pattern needs at least {MIN_TABLE_SAMPLES} samples, got {}",
                samples.len()
            )));
        }
        let mut angles_deg = Vec::with_capacity(samples.len());
        let mut gains = Vec::with_capacity(samples.len());
        for &(angle, gain) in samples {
            if !(-180.0..180.0).contains(&angle) {
                return Err(Error::InvalidPattern(format!(
                    "table angle {angle} outside [-180, 180)"
                )));
            }
            if let Some(&prev) = angles_deg.last() {
                if angle <= prev {
                    return Err(Error::InvalidPattern(format!(
                        "table angles must strictly increase ({prev} then {angle})"
                    )));
                }
            }
            if !(gain.is_finite() && gain > 0.0) {
                return Err(Error::NonPositiveGain {
                    angle_deg: angle,
                    gain,
                });
            }
            angles_deg.push(angle);
            gains.push(gain);
        }
        let ln_gains = gains.iter().map(|g| g.ln()).collect();
        Ok(Self::from_shape(Shape::Tabulated(Table {
            angles_deg,
            gains,
            ln_gains,
            interpolation,
        })))
    }

    /// Loads a `angle_deg,gain_db` CSV; gains are converted to linear.
    pub fn from_csv(path: impl AsRef<Path>, interpolation: Interpolation) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let headers = reader.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "angle_deg" || &headers[1] != "gain_db" {
            return Err(Error::InvalidPattern(format!(
                "{}: expected header `angle_deg,gain_db`",
                path.display()
            )));
        }
        let mut samples = Vec::new();
        for record in reader.records() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record[i].trim().parse::<f64>().map_err(|e| {
                    Error::InvalidPattern(format!("{}: bad number {:?}: {e}", path.display(), &record[i]))
                })
            };
            let angle = parse(0)?;
            let gain_db = parse(1)?;
            samples.push((angle, 10f64.powf(gain_db / 10.0)));
        }
        Self::tabulated(&samples, interpolation)
    }

    fn from_shape(shape: Shape) -> Self {
        RadiationPattern {
            shape,
            offset_deg: 0.0,
        }
    }

    pub fn kind(&self) -> PatternKind {
        match self.shape {
            Shape::Omnidirectional { .. } => PatternKind::Omnidirectional,
            Shape::Dipole { .. } => PatternKind::AnalyticDipole,
            Shape::Asymmetric { .. } => PatternKind::AnalyticAsymmetric,
            Shape::Tabulated(_) => PatternKind::Tabulated,
        }
    }

    /// Returns the pattern turned by `delta`: `rotated(Δ).gain(φ) == gain(φ + Δ)`.
    pub fn rotated(&self, delta: AngleDeg) -> Self {
        RadiationPattern {
            shape: self.shape.clone(),
            offset_deg: normalize_deg(self.offset_deg + delta.degrees()),
        }
    }

    /// Returns the same pattern with every gain multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidPattern(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let shape = match &self.shape {
            Shape::Omnidirectional { gain } => Shape::Omnidirectional {
                gain: gain * factor,
            },
            Shape::Dipole { peak } => Shape::Dipole {
                peak: peak * factor,
            },
            Shape::Asymmetric {
                peak,
                epsilon,
                skew_rad,
            } => Shape::Asymmetric {
                peak: peak * factor,
                epsilon: *epsilon,
                skew_rad: *skew_rad,
            },
            Shape::Tabulated(t) => {
                let gains: Vec<f64> = t.gains.iter().map(|g| g * factor).collect();
                Shape::Tabulated(Table {
                    angles_deg: t.angles_deg.clone(),
                    ln_gains: gains.iter().map(|g| g.ln()).collect(),
                    gains,
                    interpolation: t.interpolation,
                })
            }
        };
        Ok(RadiationPattern {
            shape,
            offset_deg: self.offset_deg,
        })
    }

    /// Linear gain at `phi`. Always strictly positive and finite on success.
    pub fn gain(&self, phi: AngleDeg) -> Result<f64> {
        let local = AngleDeg::new(phi.degrees() + self.offset_deg);
        let g = match &self.shape {
            Shape::Omnidirectional { gain } => *gain,
            Shape::Dipole { peak } => peak * dipole_shape(local)?,
            Shape::Asymmetric {
                peak,
                epsilon,
                skew_rad,
            } => peak * dipole_shape(local)? * (1.0 + epsilon * (local.radians() + skew_rad).sin()),
            Shape::Tabulated(t) => t.gain(local)?,
        };
        if g.is_finite() && g > 0.0 {
            Ok(g)
        } else {
            Err(Error::OutOfSupport {
                angle_deg: phi.degrees(),
            })
        }
    }

    /// Gain in dBi.
    pub fn gain_db(&self, phi: AngleDeg) -> Result<f64> {
        Ok(10.0 * self.gain(phi)?.log10())
    }

    /// `G'(φ)/G(φ)` per radian.
    pub fn log_gain_slope(&self, phi: AngleDeg) -> Result<f64> {
        // gain() also rejects nulls and out-of-range table angles
        self.gain(phi)?;
        let local = AngleDeg::new(phi.degrees() + self.offset_deg);
        let slope = match &self.shape {
            Shape::Omnidirectional { .. } => 0.0,
            Shape::Dipole { .. } => dipole_log_slope(local),
            Shape::Asymmetric {
                epsilon, skew_rad, ..
            } => {
                let arg = local.radians() + skew_rad;
                dipole_log_slope(local) + epsilon * arg.cos() / (1.0 + epsilon * arg.sin())
            }
            Shape::Tabulated(t) => t.log_slope(local),
        };
        Ok(slope)
    }
}

/// `(cos(π/2·cos φ̃)/sin φ̃)²` with `φ̃ = φ + 90°`, i.e. `(cos(π/2·sin φ)/cos φ)²`.
fn dipole_shape(phi: AngleDeg) -> Result<f64> {
    let (s, c) = phi.radians().sin_cos();
    if c.abs() < DIPOLE_NULL_EPS {
        return Err(Error::OutOfSupport {
            angle_deg: phi.degrees(),
        });
    }
    let f = (FRAC_PI_2 * s).cos() / c;
    Ok(f * f)
}

fn dipole_log_slope(phi: AngleDeg) -> f64 {
    let (s, c) = phi.radians().sin_cos();
    2.0 * s / c - PI * c * (FRAC_PI_2 * s).tan()
}

impl Table {
    fn support(&self) -> (f64, f64) {
        (self.angles_deg[0], *self.angles_deg.last().unwrap())
    }

    /// Index `k` with `angles[k] <= phi <= angles[k+1]`.
    fn bracket(&self, phi: f64) -> Result<usize> {
        let (lo, hi) = self.support();
        if phi < lo || phi > hi {
            return Err(Error::OutOfSupport { angle_deg: phi });
        }
        let k = self.angles_deg.partition_point(|&a| a <= phi);
        Ok(k.saturating_sub(1).min(self.angles_deg.len() - 2))
    }

    fn gain(&self, phi: AngleDeg) -> Result<f64> {
        let phi = phi.degrees();
        let k = self.bracket(phi)?;
        let (a0, a1) = (self.angles_deg[k], self.angles_deg[k + 1]);
        let t = (phi - a0) / (a1 - a0);
        Ok(match self.interpolation {
            Interpolation::LogLinear => {
                (self.ln_gains[k] + t * (self.ln_gains[k + 1] - self.ln_gains[k])).exp()
            }
            Interpolation::Linear => self.gains[k] + t * (self.gains[k + 1] - self.gains[k]),
        })
    }

    /// Derivative of the interpolant's log-gain, per radian. At an interior
    /// sample the two neighbouring samples give a central difference.
    fn log_slope(&self, phi: AngleDeg) -> f64 {
        let phi_deg = phi.degrees();
        let last = self.angles_deg.len() - 1;
        let k = match self.angles_deg.binary_search_by(|a| a.total_cmp(&phi_deg)) {
            Ok(k) if k > 0 && k < last => {
                let h = (self.angles_deg[k + 1] - self.angles_deg[k - 1]).to_radians();
                return (self.ln_gains[k + 1] - self.ln_gains[k - 1]) / h;
            }
            Ok(k) => k.min(last - 1),
            Err(k) => k - 1,
        };
        let h = (self.angles_deg[k + 1] - self.angles_deg[k]).to_radians();
        match self.interpolation {
            Interpolation::LogLinear => (self.ln_gains[k + 1] - self.ln_gains[k]) / h,
            Interpolation::Linear => {
                let g = self.gain(phi).expect("bracketed angle");
                (self.gains[k + 1] - self.gains[k]) / h / g
            }
        }
    }
}
