//! Fisher information and Cramér–Rao bounds for the `(d, θ)` estimate.
//!
//! Parameters are ordered `α = (d, θ)` with `d` in metres and `θ` in
//! radians; every matrix in this module uses those units. Angle bounds are
//! additionally reported in deg² by [`CrlbReport`].
//!
//! With `Kᵢ = (10/ln 10)·G′_T/G_T` evaluated at `θ + Δφᵢ`:
//!
//! ```text
//! J₁₁ = 100·n²·N / (σ²·(d·ln10)²)
//! J₁₂ = -(10·n / (d·ln10))·ΣKᵢ / σ²
//! J₂₂ = ΣKᵢ² / σ²
//! ```
//!
//! The biased bound is `ββᵀ + G·J⁻¹·Gᵀ` with `G = I + ∂β/∂α`.

use std::f64::consts::LN_10;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::channel::{sample_measurements, Scenario};
use crate::error::{Error, Result};
use crate::estimators::{estimate_mle, Knowns, MleSearch};
use crate::patterns::AngleDeg;
use crate::solver::GridSpec;

/// Relative Cauchy–Schwarz gap below which the FIM counts as singular.
const SINGULAR_REL_GAP: f64 = 1e-12;

/// Row-major 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2(pub [[f64; 2]; 2]);

impl Matrix2 {
    pub const IDENTITY: Matrix2 = Matrix2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Matrix2 = Matrix2([[0.0, 0.0], [0.0, 0.0]]);

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[row][col]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn transpose(&self) -> Matrix2 {
        let m = &self.0;
        Matrix2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn mul(&self, other: &Matrix2) -> Matrix2 {
        let (a, b) = (&self.0, &other.0);
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Matrix2(out)
    }

    pub fn add(&self, other: &Matrix2) -> Matrix2 {
        let (a, b) = (&self.0, &other.0);
        Matrix2([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }

    /// Explicit adjugate inverse; `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Matrix2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let m = &self.0;
        Some(Matrix2([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]))
    }

    pub fn outer(v: [f64; 2]) -> Matrix2 {
        Matrix2([[v[0] * v[0], v[0] * v[1]], [v[1] * v[0], v[1] * v[1]]])
    }
}

/// `Kᵢ` for each rotation of the scenario, evaluated at bearing `theta`.
pub fn k_values(scenario: &Scenario, theta: AngleDeg) -> Result<Vec<f64>> {
    scenario
        .rotations
        .iter()
        .map(|dphi| {
            let slope = scenario.tx_pattern.log_gain_slope(theta + *dphi)?;
            Ok(10.0 / LN_10 * slope)
        })
        .collect()
}

fn require_noise(scenario: &Scenario) -> Result<f64> {
    if scenario.sigma_db <= 0.0 {
        return Err(Error::ZeroNoise);
    }
    Ok(scenario.sigma_db)
}

/// Fisher information at `(d, θ)` for the scenario's rotations and noise.
pub fn fim(scenario: &Scenario, d: f64, theta: AngleDeg) -> Result<Matrix2> {
    let sigma = require_noise(scenario)?;
    let var = sigma * sigma;
    let n = scenario.path_loss_n;
    let count = scenario.rotations.len() as f64;
    let k = k_values(scenario, theta)?;
    let sum_k: f64 = k.iter().sum();
    let sum_k2: f64 = k.iter().map(|x| x * x).sum();
    let dl = d * LN_10;
    let j11 = 100.0 * n * n * count / (var * dl * dl);
    let j12 = -(10.0 * n / dl) * sum_k / var;
    let j22 = sum_k2 / var;
    Ok(Matrix2([[j11, j12], [j12, j22]]))
}

/// `J⁻¹` from its closed form in `ΣKᵢ` and `ΣKᵢ²`.
pub fn fim_inverse(scenario: &Scenario, d: f64, theta: AngleDeg) -> Result<Matrix2> {
    let sigma = require_noise(scenario)?;
    let var = sigma * sigma;
    let n = scenario.path_loss_n;
    let count = scenario.rotations.len() as f64;
    let k = k_values(scenario, theta)?;
    let sum_k: f64 = k.iter().sum();
    let sum_k2: f64 = k.iter().map(|x| x * x).sum();
    let gap = count * sum_k2 - sum_k * sum_k;
    if !(gap > SINGULAR_REL_GAP * count * sum_k2) {
        return Err(Error::SingularFim { gap });
    }
    let dl = d * LN_10;
    let i11 = var * dl * dl * sum_k2 / (100.0 * n * n * gap);
    let i12 = var * dl * sum_k / (10.0 * n * gap);
    let i22 = count * var / gap;
    Ok(Matrix2([[i11, i12], [i12, i22]]))
}

/// Diagonal of `J⁻¹`: `(var_d [m²], var_θ [rad²])`.
pub fn crlb_unbiased(scenario: &Scenario, d: f64, theta: AngleDeg) -> Result<(f64, f64)> {
    let inv = fim_inverse(scenario, d, theta)?;
    Ok((inv.get(0, 0), inv.get(1, 1)))
}

/// Multiplicative bias of the profile distance estimate: `E[d̂] = d₀·factor`.
pub fn distance_bias(scenario: &Scenario) -> f64 {
    let s = scenario.sigma_db;
    let n = scenario.path_loss_n;
    let count = scenario.rotations.len() as f64;
    10f64.powf(s * s * LN_10 / (200.0 * n * n * count))
}

/// Bias vector and gradient `∂β/∂α` feeding the biased bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasTerms {
    /// `(β_d [m], β_θ [rad])`.
    pub beta: [f64; 2],
    /// `∂β/∂α`, rows `(β_d, β_θ)`, columns `(d, θ)`.
    pub gradient: Matrix2,
}

impl BiasTerms {
    pub const ZERO: BiasTerms = BiasTerms {
        beta: [0.0, 0.0],
        gradient: Matrix2::ZERO,
    };
}

/// Where the bias terms come from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BiasModel {
    /// Closed-form distance bias with `∂β_d/∂d = factor - 1`; the bearing is
    /// treated as unbiased.
    #[default]
    Analytic,
    /// No bias: the bound reduces to `J⁻¹`.
    Unbiased,
    Explicit(BiasTerms),
    /// Central differences of the maximum-likelihood mean, with common
    /// random numbers across the perturbed positions.
    MonteCarlo(MonteCarloBias),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloBias {
    pub trials: usize,
    pub seed: u64,
    /// Distance perturbation, metres.
    pub step_d: f64,
    /// Bearing perturbation, degrees.
    pub step_theta_deg: f64,
}

impl Default for MonteCarloBias {
    fn default() -> Self {
        MonteCarloBias {
            trials: 2000,
            seed: 0,
            step_d: 0.05,
            step_theta_deg: 0.5,
        }
    }
}

pub fn analytic_bias(scenario: &Scenario, d: f64) -> BiasTerms {
    let factor = distance_bias(scenario);
    BiasTerms {
        beta: [d * (factor - 1.0), 0.0],
        gradient: Matrix2([[factor - 1.0, 0.0], [0.0, 0.0]]),
    }
}

/// Mean MLE estimate `(d̄, θ̄ [rad])` over `trials` seeded draws.
fn mle_mean(scenario: &Scenario, d: f64, theta: AngleDeg, mc: &MonteCarloBias) -> Result<[f64; 2]> {
    let at = scenario.with_position(d, theta);
    let knowns = Knowns::from_scenario(&at)?;
    let grid = GridSpec::default();
    let estimates: Vec<Result<(f64, f64)>> = (0..mc.trials)
        .into_par_iter()
        .map(|i| {
            let m = sample_measurements(&at, mc.seed.wrapping_add(i as u64))?;
            let e = estimate_mle(&m, &knowns, at.sigma_db, &grid, MleSearch::Profile)?;
            Ok((e.d_hat, e.theta_hat.to_radians()))
        })
        .collect();
    let (mut sd, mut st) = (0.0, 0.0);
    for e in estimates {
        let (a, b) = e?;
        sd += a;
        st += b;
    }
    let n = mc.trials as f64;
    Ok([sd / n, st / n])
}

pub fn monte_carlo_bias(scenario: &Scenario, d: f64, theta: AngleDeg, mc: &MonteCarloBias) -> Result<BiasTerms> {
    if mc.trials == 0 {
        return Err(Error::Config("Monte-Carlo bias needs at least one trial".into()));
    }
    let centre = mle_mean(scenario, d, theta, mc)?;
    let hd = mc.step_d;
    let ht = AngleDeg::new(mc.step_theta_deg);
    let dp = mle_mean(scenario, d + hd, theta, mc)?;
    let dm = mle_mean(scenario, d - hd, theta, mc)?;
    let tp = mle_mean(scenario, d, theta + ht, mc)?;
    let tm = mle_mean(scenario, d, AngleDeg::new(theta.degrees() - ht.degrees()), mc)?;
    let h_rad = ht.radians();
    // ∂E[α̂]/∂α by central differences; β's gradient subtracts the identity.
    let g = Matrix2([
        [(dp[0] - dm[0]) / (2.0 * hd), (tp[0] - tm[0]) / (2.0 * h_rad)],
        [(dp[1] - dm[1]) / (2.0 * hd), (tp[1] - tm[1]) / (2.0 * h_rad)],
    ]);
    Ok(BiasTerms {
        beta: [centre[0] - d, centre[1] - theta.radians()],
        gradient: g.add(&Matrix2([[-1.0, 0.0], [0.0, -1.0]])),
    })
}

pub fn resolve_bias(scenario: &Scenario, d: f64, theta: AngleDeg, model: &BiasModel) -> Result<BiasTerms> {
    Ok(match model {
        BiasModel::Analytic => analytic_bias(scenario, d),
        BiasModel::Unbiased => BiasTerms::ZERO,
        BiasModel::Explicit(b) => *b,
        BiasModel::MonteCarlo(mc) => monte_carlo_bias(scenario, d, theta, mc)?,
    })
}

/// `ββᵀ + G·J⁻¹·Gᵀ` with `G = I + ∂β/∂α`.
pub fn crlb_biased(scenario: &Scenario, d: f64, theta: AngleDeg, bias: &BiasTerms) -> Result<Matrix2> {
    let inv = fim_inverse(scenario, d, theta)?;
    let g = Matrix2::IDENTITY.add(&bias.gradient);
    Ok(Matrix2::outer(bias.beta).add(&g.mul(&inv).mul(&g.transpose())))
}

/// Population variance of `G′_T/G_T` over the rotations, in 1/rad².
pub fn g_variance(scenario: &Scenario, theta: AngleDeg) -> Result<f64> {
    let slopes: Vec<f64> = scenario
        .rotations
        .iter()
        .map(|dphi| scenario.tx_pattern.log_gain_slope(theta + *dphi))
        .collect::<Result<_>>()?;
    let n = slopes.len() as f64;
    let mean = slopes.iter().sum::<f64>() / n;
    Ok(slopes.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n)
}

/// Everything the bound computation produces for one position.
#[derive(Debug, Clone, PartialEq)]
pub struct CrlbReport {
    pub d: f64,
    pub theta_deg: f64,
    pub sigma_db: f64,
    pub k: Vec<f64>,
    /// `ΣKᵢ`.
    pub h_sum: f64,
    pub g_variance: f64,
    pub fim: Matrix2,
    pub fim_inv: Matrix2,
    pub bias_factor: f64,
    pub bias_d: f64,
    pub crlb_biased: Matrix2,
    pub crlb_unbiased_d: f64,
    pub crlb_unbiased_theta: f64,
}

impl CrlbReport {
    pub fn compute(scenario: &Scenario, d: f64, theta: AngleDeg, model: &BiasModel) -> Result<Self> {
        let k = k_values(scenario, theta)?;
        let fim_m = fim(scenario, d, theta)?;
        let fim_inv = fim_inverse(scenario, d, theta)?;
        let bias = resolve_bias(scenario, d, theta, model)?;
        let crlb_biased = crlb_biased(scenario, d, theta, &bias)?;
        Ok(CrlbReport {
            d,
            theta_deg: theta.degrees(),
            sigma_db: scenario.sigma_db,
            h_sum: k.iter().sum(),
            k,
            g_variance: g_variance(scenario, theta)?,
            fim: fim_m,
            fim_inv,
            bias_factor: distance_bias(scenario),
            bias_d: bias.beta[0],
            crlb_biased,
            crlb_unbiased_d: fim_inv.get(0, 0),
            crlb_unbiased_theta: fim_inv.get(1, 1),
        })
    }

    /// Biased distance bound, m².
    pub fn crlb_d(&self) -> f64 {
        self.crlb_biased.get(0, 0)
    }

    /// Biased bearing bound, rad².
    pub fn crlb_theta_rad2(&self) -> f64 {
        self.crlb_biased.get(1, 1)
    }

    /// Biased bearing bound, deg².
    pub fn crlb_theta_deg2(&self) -> f64 {
        self.crlb_theta_rad2() * (180.0 / std::f64::consts::PI).powi(2)
    }
}

pub const CRLB_CSV_HEADER: &str = "label,d_m,theta_deg,sigma_db,crlb_d_m2,crlb_theta_rad2,crlb_theta_deg2,\
crlb_unbiased_d_m2,crlb_unbiased_theta_rad2,bias_factor,bias_d_m,g_variance";

/// One row per `(label, report)`; the label is typically the SNR in dB.
pub fn crlb_table_csv(rows: &[(f64, CrlbReport)]) -> String {
    let mut out = format!("{CRLB_CSV_HEADER}\n");
    for (label, r) in rows {
        let _ = writeln!(
            out,
            "{label},{},{},{},{},{},{},{},{},{},{},{}",
            r.d,
            r.theta_deg,
            r.sigma_db,
            r.crlb_d(),
            r.crlb_theta_rad2(),
            r.crlb_theta_deg2(),
            r.crlb_unbiased_d,
            r.crlb_unbiased_theta,
            r.bias_factor,
            r.bias_d,
            r.g_variance
        );
    }
    out
}
