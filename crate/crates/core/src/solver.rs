//! Numerical primitives shared by the estimators: grid search with
//! shrink-and-rescan refinement in one or two variables, and crossings of
//! piecewise-linear curves `d(θ)`.

use crate::error::{Error, Result};

/// Tolerance (metres) under which two curves are considered touching.
pub const DEFAULT_TOUCH_TOL: f64 = 1e-9;

/// Search box and refinement schedule for [`maximize_2d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Distance bounds, metres.
    pub d_range: (f64, f64),
    /// Bearing bounds, degrees.
    pub theta_range: (f64, f64),
    /// Coarse grid points along (d, θ), endpoints included.
    pub coarse_steps: (usize, usize),
    pub refine_iters: usize,
    /// Bracket shrink factor per refinement round.
    pub refine_shrink: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            d_range: (0.5, 5.0),
            theta_range: (-70.0, 70.0),
            coarse_steps: (64, 281),
            refine_iters: 30,
            refine_shrink: 0.5,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("d", self.d_range), ("theta", self.theta_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidGrid(format!("{name} range ({lo}, {hi}) is empty")));
            }
        }
        if self.coarse_steps.0 < 16 || self.coarse_steps.1 < 16 {
            return Err(Error::InvalidGrid(format!(
                "coarse steps must be at least 16 per axis, got {:?}",
                self.coarse_steps
            )));
        }
        if !(0.1..=0.9).contains(&self.refine_shrink) {
            return Err(Error::InvalidGrid(format!(
                "refine shrink must be in [0.1, 0.9], got {}",
                self.refine_shrink
            )));
        }
        Ok(())
    }

    /// Points scanned per axis in each refinement round. Enough that the
    /// next bracket always covers a full scan spacing.
    fn refine_points(&self) -> usize {
        (2.0 / self.refine_shrink).ceil() as usize + 3
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum2d {
    pub d: f64,
    pub theta: f64,
    pub value: f64,
    pub evaluations: usize,
    /// Max minus min of the finite coarse-scan values; zero for a flat objective.
    pub coarse_spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum1d {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
    /// Max minus min of the finite coarse-scan values; zero for a flat objective.
    pub coarse_spread: f64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}

/// `−∞` marks an infeasible point; NaN and `+∞` are errors.
fn checked(value: f64, d: f64, theta: f64) -> Result<f64> {
    if value.is_nan() || value == f64::INFINITY {
        Err(Error::NonFiniteObjective { d, theta })
    } else {
        Ok(value)
    }
}

/// Maximizes `objective(d, θ)` over `grid`.
///
/// A coarse scan picks the best cell (ties go to the lowest d index, then
/// the lowest θ index), then each refinement round rescans a bracket around
/// the incumbent whose half-width starts at one coarse spacing and shrinks
/// by `refine_shrink` per round. The incumbent only moves on strict
/// improvement, so refinement never worsens the result. An objective value
/// of `−∞` marks an infeasible point.
pub fn maximize_2d<F>(objective: F, grid: &GridSpec) -> Result<Optimum2d>
where
    F: Fn(f64, f64) -> f64,
{
    grid.validate()?;
    let (d_lo, d_hi) = grid.d_range;
    let (t_lo, t_hi) = grid.theta_range;
    let (n_d, n_t) = grid.coarse_steps;
    let mut best: Option<Optimum2d> = None;
    let mut evaluations = 0;
    let mut lowest = f64::INFINITY;
    let mut unused = f64::INFINITY;

    let mut scan = |d_lo: f64, d_hi: f64, nd: usize, t_lo: f64, t_hi: f64, nt: usize,
                    best: &mut Option<Optimum2d>,
                    lowest: &mut f64|
     -> Result<()> {
        for d in linspace(d_lo, d_hi, nd) {
            for theta in linspace(t_lo, t_hi, nt) {
                let value = checked(objective(d, theta), d, theta)?;
                evaluations += 1;
                if value.is_finite() {
                    *lowest = lowest.min(value);
                }
                if best.is_none_or(|b| value > b.value) {
                    *best = Some(Optimum2d {
                        d,
                        theta,
                        value,
                        evaluations: 0,
                        coarse_spread: 0.0,
                    });
                }
            }
        }
        Ok(())
    };

    scan(d_lo, d_hi, n_d, t_lo, t_hi, n_t, &mut best, &mut lowest)?;
    let mut incumbent = best.expect("non-empty grid");
    if incumbent.value == f64::NEG_INFINITY {
        return Err(Error::Infeasible);
    }
    let coarse_spread = incumbent.value - lowest;

    let m = grid.refine_points();
    let mut half_d = (d_hi - d_lo) / (n_d - 1) as f64;
    let mut half_t = (t_hi - t_lo) / (n_t - 1) as f64;
    for _ in 0..grid.refine_iters {
        let (a, b) = ((incumbent.d - half_d).max(d_lo), (incumbent.d + half_d).min(d_hi));
        let (c, e) = (
            (incumbent.theta - half_t).max(t_lo),
            (incumbent.theta + half_t).min(t_hi),
        );
        let mut round = Some(incumbent);
        scan(a, b, m, c, e, m, &mut round, &mut unused)?;
        incumbent = round.expect("seeded");
        half_d *= grid.refine_shrink;
        half_t *= grid.refine_shrink;
    }
    incumbent.evaluations = evaluations;
    incumbent.coarse_spread = coarse_spread;
    Ok(incumbent)
}

/// One-dimensional search interval and schedule for [`maximize_1d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSpec {
    pub range: (f64, f64),
    pub coarse_steps: usize,
    pub refine_iters: usize,
    pub refine_shrink: f64,
}

impl LineSpec {
    pub fn validate(&self) -> Result<()> {
        GridSpec {
            d_range: (0.0, 1.0),
            theta_range: self.range,
            coarse_steps: (16, self.coarse_steps),
            refine_iters: self.refine_iters,
            refine_shrink: self.refine_shrink,
        }
        .validate()
    }
}

impl GridSpec {
    /// The θ axis of this grid as a line search.
    pub fn theta_line(&self) -> LineSpec {
        LineSpec {
            range: self.theta_range,
            coarse_steps: self.coarse_steps.1,
            refine_iters: self.refine_iters,
            refine_shrink: self.refine_shrink,
        }
    }
}

/// Same scheme as [`maximize_2d`] along a single variable.
pub fn maximize_1d<F>(objective: F, line: &LineSpec) -> Result<Optimum1d>
where
    F: Fn(f64) -> f64,
{
    line.validate()?;
    let (lo, hi) = line.range;
    let mut evaluations = 0;
    let mut lowest = f64::INFINITY;
    let mut unused = f64::INFINITY;
    let mut scan = |a: f64, b: f64, n: usize, best: &mut Option<Optimum1d>, lowest: &mut f64| -> Result<()> {
        for x in linspace(a, b, n) {
            let value = checked(objective(x), f64::NAN, x)?;
            evaluations += 1;
            if value.is_finite() {
                *lowest = lowest.min(value);
            }
            if best.is_none_or(|o| value > o.value) {
                *best = Some(Optimum1d {
                    x,
                    value,
                    evaluations: 0,
                    coarse_spread: 0.0,
                });
            }
        }
        Ok(())
    };

    let mut best = None;
    scan(lo, hi, line.coarse_steps, &mut best, &mut lowest)?;
    let mut incumbent = best.expect("non-empty grid");
    if incumbent.value == f64::NEG_INFINITY {
        return Err(Error::Infeasible);
    }
    let coarse_spread = incumbent.value - lowest;
    let m = (2.0 / line.refine_shrink).ceil() as usize + 3;
    let mut half = (hi - lo) / (line.coarse_steps - 1) as f64;
    for _ in 0..line.refine_iters {
        let mut round = Some(incumbent);
        scan((incumbent.x - half).max(lo), (incumbent.x + half).min(hi), m, &mut round, &mut unused)?;
        incumbent = round.expect("seeded");
        half *= line.refine_shrink;
    }
    incumbent.evaluations = evaluations;
    incumbent.coarse_spread = coarse_spread;
    Ok(incumbent)
}

/// Piecewise-linear curve `d(θ)` with θ in degrees, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<(f64, f64)>,
}

impl Polyline {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidPolyline(format!(
                "need at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|(t, d)| !(t.is_finite() && d.is_finite())) {
            return Err(Error::InvalidPolyline("non-finite vertex".into()));
        }
        if vertices.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidPolyline("θ must strictly increase".into()));
        }
        Ok(Polyline { vertices })
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn theta_range(&self) -> (f64, f64) {
        (self.vertices[0].0, self.vertices[self.vertices.len() - 1].0)
    }

    /// Linear interpolation; `None` outside the θ range.
    pub fn eval(&self, theta: f64) -> Option<f64> {
        let (lo, hi) = self.theta_range();
        if theta < lo || theta > hi {
            return None;
        }
        let k = self
            .vertices
            .partition_point(|v| v.0 <= theta)
            .saturating_sub(1)
            .min(self.vertices.len() - 2);
        let (t0, d0) = self.vertices[k];
        let (t1, d1) = self.vertices[k + 1];
        if theta == t0 {
            return Some(d0);
        }
        if theta == t1 {
            return Some(d1);
        }
        Some(d0 + (d1 - d0) * (theta - t0) / (t1 - t0))
    }
}

/// All crossings of two curves, ordered by θ, with the default touch tolerance.
pub fn intersect_polylines(a: &Polyline, b: &Polyline) -> Result<Vec<(f64, f64)>> {
    intersect_polylines_with_tol(a, b, DEFAULT_TOUCH_TOL)
}

/// All crossings of two curves over their common θ interval.
///
/// The difference `a(θ) - b(θ)` is linear between the merged breakpoints of
/// both curves, so each sign change gives one crossing. A breakpoint where
/// `|a - b| <= tol` is a single (touching or crossing) point; two adjacent
/// such breakpoints mean the curves coincide on a segment, which is
/// reported as [`Error::DegenerateOverlap`]. Returned distances are the
/// average of both curves at the crossing, so the result does not depend on
/// argument order.
pub fn intersect_polylines_with_tol(a: &Polyline, b: &Polyline, tol: f64) -> Result<Vec<(f64, f64)>> {
    let (a_lo, a_hi) = a.theta_range();
    let (b_lo, b_hi) = b.theta_range();
    let lo = a_lo.max(b_lo);
    let hi = a_hi.min(b_hi);
    if lo > hi {
        return Err(Error::NoOverlap);
    }

    let mut breaks: Vec<f64> = Vec::with_capacity(a.vertices.len() + b.vertices.len() + 2);
    breaks.push(lo);
    let (mut i, mut j) = (0, 0);
    let (av, bv) = (&a.vertices, &b.vertices);
    while i < av.len() || j < bv.len() {
        let next = match (av.get(i), bv.get(j)) {
            (Some(x), Some(y)) if x.0 <= y.0 => {
                i += 1;
                x.0
            }
            (Some(_), Some(y)) => {
                j += 1;
                y.0
            }
            (Some(x), None) => {
                i += 1;
                x.0
            }
            (None, Some(y)) => {
                j += 1;
                y.0
            }
            (None, None) => unreachable!(),
        };
        if next > lo && next < hi && next > *breaks.last().unwrap() {
            breaks.push(next);
        }
    }
    if hi > lo {
        breaks.push(hi);
    }

    let value = |t: f64| -> (f64, f64) {
        let da = a.eval(t).expect("inside overlap");
        let db = b.eval(t).expect("inside overlap");
        (da - db, 0.5 * (da + db))
    };

    let mut out = Vec::new();
    let mut prev: Option<(f64, f64, bool)> = None;
    for &t in &breaks {
        let (f, mid) = value(t);
        let zero = f.abs() <= tol;
        if let Some((pt, pf, pzero)) = prev {
            if zero && pzero {
                return Err(Error::DegenerateOverlap);
            }
            if !zero && !pzero && (pf < 0.0) != (f < 0.0) {
                let root = pt + (t - pt) * pf / (pf - f);
                out.push((root, value(root).1));
            }
        }
        if zero {
            out.push((t, mid));
        }
        prev = Some((t, f, zero));
    }
    Ok(out)
}
