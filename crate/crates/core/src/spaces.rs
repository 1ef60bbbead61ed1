//! Finite-dimensional normed spaces, balls, grids and distance helpers.
//!
//! Every oracle in the crate works on `ℝⁿ` with one of three norms. The
//! default is the sup-norm, whose closed balls are axis-aligned boxes, so a
//! ball and a lattice intersect without boundary ambiguity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point of `ℝⁿ`.
pub type Point = Vec<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("space dimension must be at least 1")]
    ZeroDimension,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid ball radius {0}")]
    InvalidRadius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    #[default]
    Sup,
    Euclidean,
    One,
}

impl Norm {
    /// Norm of `x`. No dimension checks; callers go through [`Space`] when
    /// the input is untrusted.
    #[inline]
    pub fn of(self, x: &[f64]) -> f64 {
        if x.len() == 1 {
            return x[0].abs();
        }
        match self {
            Norm::Sup => x.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
            Norm::Euclidean => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Norm::One => x.iter().map(|v| v.abs()).sum(),
        }
    }

    /// `‖x − y‖` without allocating.
    #[inline]
    pub fn distance(self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        if x.len() == 1 {
            return (x[0] - y[0]).abs();
        }
        match self {
            Norm::Sup => x
                .iter()
                .zip(y)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())),
            Norm::Euclidean => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Norm::One => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
        }
    }

    /// Combines per-coordinate nonnegative magnitudes into the norm of the
    /// vector they form. Used for distances to coordinatewise products.
    #[inline]
    pub fn combine(self, parts: impl Iterator<Item = f64>) -> f64 {
        match self {
            Norm::Sup => parts.fold(0.0_f64, f64::max),
            Norm::Euclidean => {
                let mut single = None;
                let mut sum = 0.0;
                let mut count = 0usize;
                for p in parts {
                    count += 1;
                    single = Some(p);
                    sum += p * p;
                }
                if count == 1 {
                    single.unwrap_or(0.0)
                } else {
                    sum.sqrt()
                }
            }
            Norm::One => parts.sum(),
        }
    }
}

/// `ℝⁿ` equipped with a fixed norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Space {
    dim: usize,
    norm: Norm,
}

impl Space {
    pub fn new(dim: usize, norm: Norm) -> Result<Self, SpaceError> {
        if dim == 0 {
            return Err(SpaceError::ZeroDimension);
        }
        Ok(Self { dim, norm })
    }

    /// The real line. All three norms agree there.
    pub fn line() -> Self {
        Self {
            dim: 1,
            norm: Norm::Sup,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_kind(&self) -> Norm {
        self.norm
    }

    pub fn check(&self, x: &[f64]) -> Result<(), SpaceError> {
        if x.len() != self.dim {
            return Err(SpaceError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn norm(&self, x: &[f64]) -> Result<f64, SpaceError> {
        self.check(x)?;
        Ok(self.norm.of(x))
    }

    pub fn dist(&self, x: &[f64], y: &[f64]) -> Result<f64, SpaceError> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.norm.distance(x, y))
    }

    /// `dist(x, S)` for a finite set; `+∞` when `S` is empty.
    pub fn dist_to_finite_set(&self, x: &[f64], set: &[Point]) -> Result<f64, SpaceError> {
        self.check(x)?;
        let mut best = f64::INFINITY;
        for s in set {
            self.check(s)?;
            best = best.min(self.norm.distance(x, s));
        }
        Ok(best)
    }
}

/// Free-function form of [`Space::dist_to_finite_set`].
pub fn dist_point_to_finite_set(space: &Space, x: &[f64], set: &[Point]) -> Result<f64, SpaceError> {
    space.dist_to_finite_set(x, set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
    #[serde(default)]
    pub open: bool,
}

impl Ball {
    pub fn closed(center: Point, radius: f64) -> Result<Self, SpaceError> {
        if !(radius >= 0.0) {
            return Err(SpaceError::InvalidRadius(radius));
        }
        Ok(Self {
            center,
            radius,
            open: false,
        })
    }

    pub fn open(center: Point, radius: f64) -> Result<Self, SpaceError> {
        if !(radius >= 0.0) {
            return Err(SpaceError::InvalidRadius(radius));
        }
        Ok(Self {
            center,
            radius,
            open: true,
        })
    }

    /// Exact membership: `≤` for closed balls, `<` for open ones.
    #[inline]
    pub fn contains(&self, norm: Norm, x: &[f64]) -> bool {
        let d = norm.distance(x, &self.center);
        if self.open {
            d < self.radius
        } else {
            d <= self.radius
        }
    }
}

/// Anything that enumerates a finite, deterministically ordered point set.
///
/// Sweeps index into the set so that work can be split across threads while
/// each index still denotes the same point.
pub trait Sampling: Sync {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn point(&self, index: usize) -> Point;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Axis-aligned box discretized with a fixed number of points per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    steps: Vec<usize>,
}

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, steps: Vec<usize>) -> Result<Self, SpaceError> {
        if lower.is_empty() {
            return Err(SpaceError::ZeroDimension);
        }
        if lower.len() != upper.len() || lower.len() != steps.len() {
            return Err(SpaceError::InvalidGrid(format!(
                "bounds and steps disagree in length ({}, {}, {})",
                lower.len(),
                upper.len(),
                steps.len()
            )));
        }
        for (axis, ((lo, hi), n)) in lower.iter().zip(&upper).zip(&steps).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(SpaceError::InvalidGrid(format!(
                    "axis {axis}: bad bounds [{lo}, {hi}]"
                )));
            }
            if *n == 0 {
                return Err(SpaceError::InvalidGrid(format!("axis {axis}: zero steps")));
            }
        }
        Ok(Self { lower, upper, steps })
    }

    /// One-dimensional grid on `[lower, upper]`.
    pub fn interval(lower: f64, upper: f64, steps: usize) -> Result<Self, SpaceError> {
        Self::new(vec![lower], vec![upper], vec![steps])
    }

    /// Grid on `[lower, upper]` whose spacing does not exceed `step`.
    pub fn interval_with_step(lower: f64, upper: f64, step: f64) -> Result<Self, SpaceError> {
        if !(step > 0.0) {
            return Err(SpaceError::InvalidGrid(format!("step {step}")));
        }
        let intervals = ((upper - lower) / step - 1e-9).ceil().max(0.0) as usize;
        Self::interval(lower, upper, intervals + 1)
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    /// Spacing along `axis`; zero for a single-point axis.
    pub fn spacing(&self, axis: usize) -> f64 {
        let n = self.steps[axis];
        if n < 2 {
            0.0
        } else {
            (self.upper[axis] - self.lower[axis]) / (n - 1) as f64
        }
    }

    /// Largest spacing over all axes.
    pub fn max_spacing(&self) -> f64 {
        (0..self.lower.len())
            .map(|a| self.spacing(a))
            .fold(0.0, f64::max)
    }

    #[inline]
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        let n = self.steps[axis];
        if n == 1 {
            self.lower[axis]
        } else {
            let v = self.lower[axis]
                + i as f64 * (self.upper[axis] - self.lower[axis]) / (n - 1) as f64;
            v.min(self.upper[axis])
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

impl Sampling for Grid {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn len(&self) -> usize {
        self.steps.iter().product()
    }

    /// Lexicographic: the first axis varies slowest.
    fn point(&self, index: usize) -> Point {
        let mut rest = index;
        let mut out = vec![0.0; self.lower.len()];
        for axis in (0..self.lower.len()).rev() {
            let n = self.steps[axis];
            out[axis] = self.coordinate(axis, rest % n);
            rest /= n;
        }
        out
    }
}

/// Enumerates the grid's points in lexicographic order.
pub fn grid_points(grid: &Grid) -> Vec<Point> {
    grid.points()
}

/// Center-symmetric lattice covering a closed ball.
///
/// Offsets along each axis are `(i/m)·r` for `i ∈ {−m, …, m}`, so the center
/// itself is always a lattice point and a lattice with `2m` per side contains
/// the one with `m`. Under non-sup norms the box lattice is filtered to the
/// ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallLattice {
    center: Point,
    radius: f64,
    per_side: usize,
    offsets: Vec<f64>,
    kept: Option<Vec<usize>>,
}

impl BallLattice {
    pub fn new(center: Point, radius: f64, per_side: usize, norm: Norm) -> Result<Self, SpaceError> {
        if center.is_empty() {
            return Err(SpaceError::ZeroDimension);
        }
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(SpaceError::InvalidRadius(radius));
        }
        let m = if radius == 0.0 { 0 } else { per_side.max(1) };
        let mut offsets = Vec::with_capacity(2 * m + 1);
        for i in -(m as i64)..=(m as i64) {
            if m == 0 {
                offsets.push(0.0);
            } else {
                let frac = (i.unsigned_abs() as f64) / (m as f64);
                let o = frac * radius;
                offsets.push(if i < 0 { -o } else { o });
            }
        }
        let mut lattice = Self {
            center,
            radius,
            per_side: m,
            offsets,
            kept: None,
        };
        if norm != Norm::Sup && lattice.center.len() > 1 {
            let side = lattice.offsets.len();
            let total = side.pow(lattice.center.len() as u32);
            let kept = (0..total)
                .filter(|&k| {
                    let off = lattice.offset_vector(k);
                    norm.of(&off) <= radius
                })
                .collect();
            lattice.kept = Some(kept);
        }
        Ok(lattice)
    }

    /// Lattice with spacing at most `step`.
    pub fn with_step(center: Point, radius: f64, step: f64, norm: Norm) -> Result<Self, SpaceError> {
        if !(step > 0.0) {
            return Err(SpaceError::InvalidGrid(format!("step {step}")));
        }
        Self::new(center, radius, per_side_for(radius, step), norm)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn per_side(&self) -> usize {
        self.per_side
    }

    /// Actual lattice spacing.
    pub fn spacing(&self) -> f64 {
        if self.per_side == 0 {
            0.0
        } else {
            self.radius / self.per_side as f64
        }
    }

    fn offset_vector(&self, mut k: usize) -> Point {
        let side = self.offsets.len();
        let n = self.center.len();
        let mut out = vec![0.0; n];
        for axis in (0..n).rev() {
            out[axis] = self.offsets[k % side];
            k /= side;
        }
        out
    }

    /// Writes the point into `out` without allocating.
    #[inline]
    pub fn point_into(&self, index: usize, out: &mut [f64]) {
        let mut k = match &self.kept {
            Some(kept) => kept[index],
            None => index,
        };
        let side = self.offsets.len();
        for axis in (0..self.center.len()).rev() {
            out[axis] = self.center[axis] + self.offsets[k % side];
            k /= side;
        }
    }
}

impl Sampling for BallLattice {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn len(&self) -> usize {
        match &self.kept {
            Some(k) => k.len(),
            None => self.offsets.len().pow(self.center.len() as u32),
        }
    }

    fn point(&self, index: usize) -> Point {
        let mut out = vec![0.0; self.center.len()];
        self.point_into(index, &mut out);
        out
    }
}

/// Lattice points per half-axis needed to reach spacing `step` on radius `radius`.
pub fn per_side_for(radius: f64, step: f64) -> usize {
    if radius <= 0.0 {
        return 0;
    }
    ((radius / step) - 1e-9).ceil().max(1.0) as usize
}
