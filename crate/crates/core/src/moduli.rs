//! Brute-force estimators for subregularity, calmness and Lipschitz moduli.
//!
//! Every estimator is a supremum of a ratio over a finite sample. Sweeps are
//! split across the current rayon pool and reduced with `max`, ties going to
//! the lowest sample index, so the value *and* the witness are independent of
//! how the work was partitioned.
//!
//! Ratio conventions shared by all oracles:
//!
//! * a denominator of `+∞` (empty image) makes the constraint vacuous: `0`;
//! * a zero numerator contributes `0` (this drops the center point `x = x̄`);
//! * a zero denominator with a nonzero numerator is `+∞`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maps::{ImageSet, MapError, ParametricSingleValuedMap, SetValuedMap, SingleValuedMap};
use crate::serde_ext::extended;
use crate::spaces::{per_side_for, Ball, BallLattice, Grid, Norm, Point, Sampling, SpaceError};

/// Default tolerance for `ȳ ∈ F(x̄)`.
pub const CENTER_TOL: f64 = 1e-12;

/// Default tolerance for `u ∈ F⁻¹(ȳ)` in grid inverses.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModuliError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("center is not on the graph: dist(ȳ, F(x̄)) = {0}")]
    CenterNotOnGraph(f64),
    #[error("image at the center is not the single point z̄ (excess {0})")]
    CenterNotIsolated(f64),
    #[error("no graph points in the window")]
    EmptyWindow,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("witness does not belong to this oracle")]
    WitnessMismatch,
}

/// `num / den` under the module's conventions.
#[inline]
pub fn ratio(num: f64, den: f64) -> f64 {
    if den == f64::INFINITY || num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Which modulus an estimate measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    SubregAt,
    StrongAt,
    StrongAround,
    Calmness,
    IsolatedCalmness,
    Lipschitz,
    EquiContinuity,
    Continuity,
}

/// Argument tuple attaining a supremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Point { x: Point },
    Pair { x: Point, u: Point },
    GraphNeighbor { x: Point, y: Point, u: Point },
    ParamPair { s: Point, x: Point, u: Point },
    Param { s: Point },
}

/// Result record of one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub kind: EstimateKind,
    #[serde(with = "extended")]
    pub value: f64,
    pub witness: Option<Witness>,
    pub sample_count: usize,
    pub grid_step: f64,
    pub radius: f64,
    /// Every other radius the sweep used (`a`, `b`, `r0`, ...).
    pub radii: BTreeMap<String, f64>,
}

impl ModulusEstimate {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Sampling resolution and tolerances for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub step: f64,
    pub membership_tol: f64,
    pub center_tol: f64,
}

impl Sweep {
    pub fn new(step: f64) -> Self {
        Self {
            step,
            membership_tol: MEMBERSHIP_TOL,
            center_tol: CENTER_TOL,
        }
    }

    pub fn with_center_tol(mut self, tol: f64) -> Self {
        self.center_tol = tol;
        self
    }

    pub fn with_membership_tol(mut self, tol: f64) -> Self {
        self.membership_tol = tol;
        self
    }

    fn check(&self) -> Result<(), ModuliError> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(ModuliError::Invalid(format!("grid step {}", self.step)));
        }
        if !(self.membership_tol >= 0.0) || !(self.center_tol >= 0.0) {
            return Err(ModuliError::Invalid("negative tolerance".into()));
        }
        Ok(())
    }
}

/// A sweep that can be re-run on its own witness.
pub trait Oracle: Sync {
    fn kind(&self) -> EstimateKind;
    fn estimate(&self) -> Result<ModulusEstimate, ModuliError>;
    /// Ratio at `witness`, computed exactly as inside the sweep.
    fn replay(&self, witness: &Witness) -> Result<f64, ModuliError>;
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    index: usize,
    aux: usize,
}

impl Best {
    const NONE: Best = Best {
        value: f64::NEG_INFINITY,
        index: usize::MAX,
        aux: usize::MAX,
    };

    #[inline]
    fn pick(a: Best, b: Best) -> Best {
        if b.value > a.value || (b.value == a.value && b.index < a.index) {
            b
        } else {
            a
        }
    }
}

/// Parallel `max` over `0..len` with a lowest-index tie-break. `f` receives a
/// per-worker scratch buffer of length `dim` and returns `(value, aux)`.
fn sweep_max<F>(len: usize, dim: usize, f: F) -> Result<Option<Best>, ModuliError>
where
    F: Fn(usize, &mut [f64]) -> Result<(f64, usize), ModuliError> + Sync + Send,
{
    let best = (0..len)
        .into_par_iter()
        .map_init(
            || vec![0.0; dim],
            |buf, i| {
                f(i, buf).map(|(value, aux)| Best {
                    value,
                    index: i,
                    aux,
                })
            },
        )
        .try_reduce(|| Best::NONE, |a, b| Ok(Best::pick(a, b)))?;
    Ok((best.index != usize::MAX && best.value > 0.0).then_some(best))
}

fn check_radius(name: &str, r: f64) -> Result<(), ModuliError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(ModuliError::Invalid(format!("{name} must be positive and finite, got {r}")));
    }
    Ok(())
}

fn center_on_graph(
    map: &SetValuedMap,
    center: &[f64],
    value: &[f64],
    tol: f64,
) -> Result<(), ModuliError> {
    let d = map.dist_to_image(center, value)?;
    if d > tol {
        return Err(ModuliError::CenterNotOnGraph(d));
    }
    Ok(())
}

#[inline]
fn shifted_into(base: &[f64], lattice: &BallLattice, index: usize, out: &mut [f64]) {
    lattice.point_into(index, out);
    for (o, b) in out.iter_mut().zip(base) {
        *o += b;
    }
}

// ---------------------------------------------------------------------------
// Metric subregularity at a point.

/// `sup dist(x, F⁻¹(ȳ)) / dist(ȳ, F(x))` over a lattice on `B[x̄, radius]`.
///
/// The inverse image is taken on a lattice of twice the radius and twice the
/// points per side, which contains the domain lattice; since `x̄ ∈ F⁻¹(ȳ)`,
/// the nearest inverse point of any `x ∈ B[x̄, radius]` lies in that lattice's
/// ball, so the truncation loses nothing.
pub struct SubregAtOracle<'a> {
    map: &'a SetValuedMap,
    center: Point,
    value: Point,
    radius: f64,
    lattice: BallLattice,
    /// Sorted coordinates on the line, row points otherwise.
    inverse: Vec<Point>,
    inverse_line: Vec<f64>,
}

impl<'a> SubregAtOracle<'a> {
    pub fn new(
        map: &'a SetValuedMap,
        center: &[f64],
        value: &[f64],
        radius: f64,
        sweep: Sweep,
    ) -> Result<Self, ModuliError> {
        sweep.check()?;
        check_radius("radius", radius)?;
        center_on_graph(map, center, value, sweep.center_tol)?;
        let norm = map.domain().norm_kind();
        let per_side = per_side_for(radius, sweep.step);
        let lattice = BallLattice::new(center.to_vec(), radius, per_side, norm)?;
        let wide = BallLattice::new(center.to_vec(), 2.0 * radius, 2 * per_side, norm)?;
        let mut inverse = Vec::new();
        let mut buf = vec![0.0; center.len()];
        for i in 0..wide.len() {
            wide.point_into(i, &mut buf);
            if map.in_domain(&buf) && map.dist_unchecked(&buf, value, None)? <= sweep.membership_tol {
                inverse.push(buf.clone());
            }
        }
        let inverse_line = if center.len() == 1 {
            let mut v: Vec<f64> = inverse.iter().map(|p| p[0]).collect();
            v.sort_by(f64::total_cmp);
            v
        } else {
            Vec::new()
        };
        Ok(Self {
            map,
            center: center.to_vec(),
            value: value.to_vec(),
            radius,
            lattice,
            inverse,
            inverse_line,
        })
    }

    /// Grid approximation of `dist(x, F⁻¹(ȳ))`.
    pub fn inverse_dist(&self, x: &[f64]) -> f64 {
        if x.len() == 1 {
            let v = &self.inverse_line;
            let k = v.partition_point(|u| *u < x[0]);
            let mut best = f64::INFINITY;
            if k < v.len() {
                best = best.min((v[k] - x[0]).abs());
            }
            if k > 0 {
                best = best.min((x[0] - v[k - 1]).abs());
            }
            return best;
        }
        let norm = self.map.domain().norm_kind();
        self.inverse
            .iter()
            .map(|u| norm.distance(u, x))
            .fold(f64::INFINITY, f64::min)
    }

    fn ratio_at(&self, x: &[f64]) -> Result<f64, ModuliError> {
        if !self.map.in_domain(x) {
            return Ok(0.0);
        }
        let den = self.map.dist_unchecked(x, &self.value, None)?;
        if den == f64::INFINITY {
            return Ok(0.0);
        }
        Ok(ratio(self.inverse_dist(x), den))
    }

    pub fn inverse_len(&self) -> usize {
        self.inverse.len()
    }
}

impl Oracle for SubregAtOracle<'_> {
    fn kind(&self) -> EstimateKind {
        EstimateKind::SubregAt
    }

    fn estimate(&self) -> Result<ModulusEstimate, ModuliError> {
        let n = self.center.len();
        let best = sweep_max(self.lattice.len(), n, |i, buf| {
            self.lattice.point_into(i, buf);
            Ok((self.ratio_at(buf)?, 0))
        })?;
        let mut radii = BTreeMap::new();
        radii.insert("inverse_radius".into(), 2.0 * self.radius);
        Ok(ModulusEstimate {
            kind: EstimateKind::SubregAt,
            value: best.map_or(0.0, |b| b.value),
            witness: best.map(|b| Witness::Point {
                x: self.lattice.point(b.index),
            }),
            sample_count: self.lattice.len(),
            grid_step: self.lattice.spacing(),
            radius: self.radius,
            radii,
        })
    }

    fn replay(&self, witness: &Witness) -> Result<f64, ModuliError> {
        match witness {
            Witness::Point { x } => self.ratio_at(x),
            _ => Err(ModuliError::WitnessMismatch),
        }
    }
}

// ---------------------------------------------------------------------------
// Strong metric subregularity at a point.

/// `sup ‖x − x̄‖ / dist(ȳ, F(x))` over a lattice on `B[x̄, radius]`.
pub struct StrongAtOracle<'a> {
    map: &'a SetValuedMap,
    center: Point,
    value: Point,
    radius: f64,
    lattice: BallLattice,
}

impl<'a> StrongAtOracle<'a> {
    pub fn new(
        map: &'a SetValuedMap,
        center: &[f64],
        value: &[f64],
        radius: f64,
        sweep: Sweep,
    ) -> Result<Self, ModuliError> {
        sweep.check()?;
        check_radius("radius", radius)?;
        center_on_graph(map, center, value, sweep.center_tol)?;
        let lattice = BallLattice::with_step(
            center.to_vec(),
            radius,
            sweep.step,
            map.domain().norm_kind(),
        )?;
        Ok(Self {
            map,
            center: center.to_vec(),
            value: value.to_vec(),
            radius,
            lattice,
        })
    }

    /// Same sweep on an explicit number of lattice points per half-axis.
    pub fn with_per_side(
        map: &'a SetValuedMap,
        center: &[f64],
        value: &[f64],
        radius: f64,
        per_side: usize,
    ) -> Result<Self, ModuliError> {
        check_radius("radius", radius)?;
        center_on_graph(map, center, value, CENTER_TOL)?;
        let lattice = BallLattice::new(center.to_vec(), radius, per_side, map.domain().norm_kind())?;
        Ok(Self {
            map,
            center: center.to_vec(),
            value: value.to_vec(),
            radius,
            lattice,
        })
    }

    fn ratio_at(&self, x: &[f64]) -> Result<f64, ModuliError> {
        if !self.map.in_domain(x) {
            return Ok(0.0);
        }
        let num = self.map.domain().norm_kind().distance(x, &self.center);
        if num == 0.0 {
            return Ok(0.0);
        }
        let den = self.map.dist_unchecked(x, &self.value, None)?;
        Ok(ratio(num, den))
    }
}

impl Oracle for StrongAtOracle<'_> {
    fn kind(&self) -> EstimateKind {
        EstimateKind::StrongAt
    }

    fn estimate(&self) -> Result<ModulusEstimate, ModuliError> {
        let best = sweep_max(self.lattice.len(), self.center.len(), |i, buf| {
            self.lattice.point_into(i, buf);
            Ok((self.ratio_at(buf)?, 0))
        })?;
        Ok(ModulusEstimate {
            kind: EstimateKind::StrongAt,
            value: best.map_or(0.0, |b| b.value),
            witness: best.map(|b| Witness::Point {
                x: self.lattice.point(b.index),
            }),
            sample_count: self.lattice.len(),
            grid_step: self.lattice.spacing(),
            radius: self.radius,
            radii: BTreeMap::new(),
        })
    }

    fn replay(&self, witness: &Witness) -> Result<f64, ModuliError> {
        match witness {
            Witness::Point { x } => self.ratio_at(x),
            _ => Err(ModuliError::WitnessMismatch),
        }
    }
}

// ---------------------------------------------------------------------------
// Strong metric subregularity around a point.

/// For graph samples `(x, y)` with `x ∈ B[x̄, a]`, `y ∈ B[ȳ, b]`:
/// `sup ‖u − x‖ / dist(y, F(u) ∩ B[ȳ, b])` over `u` in a lattice on `B[x, r₀]`.
pub struct StrongAroundOracle<'a> {
    map: &'a SetValuedMap,
    center: Point,
    a: f64,
    b: f64,
    r0: f64,
    step: f64,
    range_ball: Ball,
    samples: Vec<(Point, Point)>,
    offsets: BallLattice,
}

impl<'a> StrongAroundOracle<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        map: &'a SetValuedMap,
        center: &[f64],
        value: &[f64],
        a: f64,
        b: f64,
        r0: f64,
        sweep: Sweep,
    ) -> Result<Self, ModuliError> {
        sweep.check()?;
        check_radius("a", a)?;
        check_radius("b", b)?;
        check_radius("r0", r0)?;
        center_on_graph(map, center, value, sweep.center_tol)?;
        let dnorm = map.domain().norm_kind();
        let rnorm = map.range().norm_kind();
        let range_ball = Ball::closed(value.to_vec(), b)?;
        let window = BallLattice::with_step(center.to_vec(), a, sweep.step, dnorm)?;
        let mut samples = Vec::new();
        for i in 0..window.len() {
            let x = window.point(i);
            if !map.in_domain(&x) {
                continue;
            }
            let image = map.eval_unchecked(&x)?.intersect_ball(rnorm, &range_ball)?;
            for y in image.sample(sweep.step)? {
                samples.push((x.clone(), y));
            }
        }
        if samples.is_empty() {
            return Err(ModuliError::EmptyWindow);
        }
        let offsets = BallLattice::with_step(vec![0.0; center.len()], r0, sweep.step, dnorm)?;
        Ok(Self {
            map,
            center: center.to_vec(),
            a,
            b,
            r0,
            step: sweep.step,
            range_ball,
            samples,
            offsets,
        })
    }

    pub fn graph_samples(&self) -> &[(Point, Point)] {
        &self.samples
    }

    fn ratio_at(&self, x: &[f64], y: &[f64], u: &[f64]) -> Result<f64, ModuliError> {
        if !self.map.in_domain(u) {
            return Ok(0.0);
        }
        let num = self.map.domain().norm_kind().distance(u, x);
        if num == 0.0 {
            return Ok(0.0);
        }
        let den = self.map.dist_unchecked(u, y, Some(&self.range_ball))?;
        Ok(ratio(num, den))
    }

    fn sample_sup(&self, k: usize, buf: &mut [f64]) -> Result<(f64, usize), ModuliError> {
        let (x, y) = &self.samples[k];
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for j in 0..self.offsets.len() {
            shifted_into(x, &self.offsets, j, buf);
            let r = self.ratio_at(x, y, buf)?;
            if r > best.0 {
                best = (r, j);
            }
        }
        Ok(best)
    }
}

impl Oracle for StrongAroundOracle<'_> {
    fn kind(&self) -> EstimateKind {
        EstimateKind::StrongAround
    }

    fn estimate(&self) -> Result<ModulusEstimate, ModuliError> {
        let n = self.center.len();
        let best = sweep_max(self.samples.len(), n, |k, buf| self.sample_sup(k, buf))?;
        let witness = best.map(|b| {
            let (x, y) = &self.samples[b.index];
            let mut u = vec![0.0; n];
            shifted_into(x, &self.offsets, b.aux, &mut u);
            Witness::GraphNeighbor {
                x: x.clone(),
                y: y.clone(),
                u,
            }
        });
        let mut radii = BTreeMap::new();
        radii.insert("a".into(), self.a);
        radii.insert("b".into(), self.b);
        radii.insert("r0".into(), self.r0);
        Ok(ModulusEstimate {
            kind: EstimateKind::StrongAround,
            value: best.map_or(0.0, |b| b.value),
            witness,
            sample_count: self.samples.len() * self.offsets.len(),
            grid_step: self.step,
            radius: self.a,
            radii,
        })
    }

    fn replay(&self, witness: &Witness) -> Result<f64, ModuliError> {
        match witness {
            Witness::GraphNeighbor { x, y, u } => self.ratio_at(x, y, u),
            _ => Err(ModuliError::WitnessMismatch),
        }
    }
}

// ---------------------------------------------------------------------------
// Calmness of single-valued maps.

/// `sup ‖g(x) − g(x̄)‖ / ‖x − x̄‖` over a lattice on `B[x̄, radius]`, `x ≠ x̄`.
pub struct CalmnessOracle<'a> {
    g: &'a SingleValuedMap,
    center: Point,
    g_center: Point,
    radius: f64,
    lattice: BallLattice,
}

impl<'a> CalmnessOracle<'a> {
    pub fn new(g: &'a SingleValuedMap, center: &[f64], radius: f64, step: f64) -> Result<Self, ModuliError> {
        Sweep::new(step).check()?;
        check_radius("radius", radius)?;
        let g_center = g.apply(center)?;
        let lattice = BallLattice::with_step(center.to_vec(), radius, step, g.space().norm_kind())?;
        Ok(Self {
            g,
            center: center.to_vec(),
            g_center,
            radius,
            lattice,
        })
    }

    pub fn with_per_side(
        g: &'a SingleValuedMap,
        center: &[f64],
        radius: f64,
        per_side: usize,
    ) -> Result<Self, ModuliError> {
        check_radius("radius", radius)?;
        let g_center = g.apply(center)?;
        let lattice = BallLattice::new(center.to_vec(), radius, per_side, g.space().norm_kind())?;
        Ok(Self {
            g,
            center: center.to_vec(),
            g_center,
            radius,
            lattice,
        })
    }

    pub fn value_at_center(&self) -> &[f64] {
        &self.g_center
    }

    fn ratio_with(&self, x: &[f64], gx: &mut [f64]) -> f64 {
        let norm = self.g.space().norm_kind();
        let den = norm.distance(x, &self.center);
        if den == 0.0 {
            return 0.0;
        }
        self.g.rule().apply_into(x, gx);
        norm.distance(gx, &self.g_center) / den
    }
}

impl Oracle for CalmnessOracle<'_> {
    fn kind(&self) -> EstimateKind {
        EstimateKind::Calmness
    }

    fn estimate(&self) -> Result<ModulusEstimate, ModuliError> {
        let n = self.center.len();
        let best = sweep_max(self.lattice.len(), 2 * n, |i, buf| {
            let (x, gx) = buf.split_at_mut(n);
            self.lattice.point_into(i, x);
            Ok((self.ratio_with(x, gx), 0))
        })?;
        Ok(ModulusEstimate {
            kind: EstimateKind::Calmness,
            value: best.map_or(0.0, |b| b.value),
            witness: best.map(|b| Witness::Point {
                x: self.lattice.point(b.index),
            }),
            sample_count: self.lattice.len(),
            grid_step: self.lattice.spacing(),
            radius: self.radius,
            radii: BTreeMap::new(),
        })
    }

    fn replay(&self, witness: &Witness) -> Result<f64, ModuliError> {
        match witness {
            Witness::Point { x } => {
                self.g.space().check(x)?;
                let mut gx = vec![0.0; x.len()];
                Ok(self.ratio_with(x, &mut gx))
            }
            _ => Err(ModuliError::WitnessMismatch),
        }
    }
}

// ---------------------------------------------------------------------------
// Isolated calmness of set-valued maps.

/// Largest distance from `z` to a point of `image`; `None` for `∅`.
pub fn excess(image: &ImageSet, norm: Norm, z: &[f64]) -> Option<f64> {
    match image {
        ImageSet::Empty => None,
        ImageSet::Points(pts) => Some(pts.iter().map(|p| norm.distance(p, z)).fold(0.0, f64::max)),
        ImageSet::Product(factors) => Some(norm.combine(factors.iter().zip(z).map(|(u, c)| {
            u.intervals()
                .iter()
                .map(|i| (i.lo - c).abs().max((i.hi - c).abs()))
                .fold(0.0, f64::max)
        }))),
    }
}

/// `sup_{x ≠ x̄} sup_{z ∈ G(x)} ‖z − z̄‖ / ‖x − x̄‖` over a lattice on
/// `B[x̄, radius]`, after checking `G(x̄) = {z̄}`.
pub struct IsolatedCalmnessOracle<'a> {
    map: &'a SetValuedMap,
    center: Point,
    anchor: Point,
    radius: f64,
    lattice: BallLattice,
}

impl<'a> IsolatedCalmnessOracle<'a> {
    pub fn new(
        map: &'a SetValuedMap,
        center: &[f64],
        anchor: &[f64],
        radius: f64,
        sweep: Sweep,
    ) -> Result<Self, ModuliError> {
        sweep.check()?;
        check_radius("radius", radius)?;
        map.range().check(anchor)?;
        let at_center = map.evaluate(center)?;
        let e = excess(&at_center, map.range().norm_kind(), anchor).unwrap_or(f64::INFINITY);
        if e > sweep.center_tol {
            return Err(ModuliError::CenterNotIsolated(e));
        }
        let lattice = BallLattice::with_step(center.to_vec(), radius, sweep.step, map.domain().norm_kind())?;
        Ok(Self {
            map,
            center: center.to_vec(),
            anchor: anchor.to_vec(),
            radius,
            lattice,
        })
    }

    fn ratio_at(&self, x: &[f64]) -> Result<f64, ModuliError> {
        if !self.map.in_domain(x) {
            return Ok(0.0);
        }
        let den = self.map.domain().norm_kind().distance(x, &self.center);
        if den == 0.0 {
            return Ok(0.0);
        }
        let image = self.map.eval_unchecked(x)?;
        Ok(excess(&image, self.map.range().norm_kind(), &self.anchor).map_or(0.0, |e| e / den))
    }
}

impl Oracle for IsolatedCalmnessOracle<'_> {
    fn kind(&self) -> EstimateKind {
        EstimateKind::IsolatedCalmness
    }

    fn estimate(&self) -> Result<ModulusEstimate, ModuliError> {
        let best = sweep_max(self.lattice.len(), self.center.len(), |i, buf| {
            self.lattice.point_into(i, buf);
            Ok((self.ratio_at(buf)?, 0))
        })?;
        Ok(ModulusEstimate {
            kind: EstimateKind::IsolatedCalmness,
            value: best.map_or(0.0, |b| b.value),
            witness: best.map(|b| Witness::Point {
                x: self.lattice.point(b.index),
            }),
            sample_count: self.lattice.len(),
            grid_step: self.lattice.spacing(),
            radius: self.radius,
            radii: BTreeMap::new(),
        })
    }

    fn replay(&self, witness: &Witness) -> Result<f64, ModuliError> {
        match witness {
            Witness::Point { x } => self.ratio_at(x),
            _ => Err(ModuliError::WitnessMismatch),
        }
    }
}

// ---------------------------------------------------------------------------
// Lipschitz constant over a grid.

/// `sup ‖g(x) − g(u)‖ / ‖x − u‖` over distinct grid pairs.
pub struct LipschitzOracle<'a> {
    g: &'a SingleValuedMap,
    points: Vec<Point>,
    values: Vec<Point>,
    step: f64,
}

impl<'a> LipschitzOracle<'a> {
    pub fn new(g: &'a SingleValuedMap, grid: &Grid) -> Result<Self, ModuliError> {
        if grid.len() < 2 {
            return Err(ModuliError::Invalid("need at least two grid points".into()));
        }
        g.space().check(grid.lower())?;
        let points = grid.points();
        let values = points.iter().map(|p| g.rule().apply(p)).collect();
        Ok(Self {
            g,
            points,
            values,
            step: grid.max_spacing(),
        })
    }

    fn quotient(&self, x: &[f64], gx: &[f64], u: &[f64], gu: &[f64]) -> f64 {
        let norm = self.g.space().norm_kind();
        ratio(norm.distance(gx, gu), norm.distance(x, u))
    }
}

impl Oracle for LipschitzOracle<'_> {
    fn kind(&self) -> EstimateKind {
        EstimateKind::Lipschitz
    }

    fn estimate(&self) -> Result<ModulusEstimate, ModuliError> {
        let n = self.points.len();
        let best = sweep_max(n, 0, |i, _| {
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for j in i + 1..n {
                let q = self.quotient(&self.points[i], &self.values[i], &self.points[j], &self.values[j]);
                if q > best.0 {
                    best = (q, j);
                }
            }
            Ok(best)
        })?;
        Ok(ModulusEstimate {
            kind: EstimateKind::Lipschitz,
            value: best.map_or(0.0, |b| b.value),
            witness: best.map(|b| Witness::Pair {
                x: self.points[b.index].clone(),
                u: self.points[b.aux].clone(),
            }),
            sample_count: n * (n - 1) / 2,
            grid_step: self.step,
            radius: 0.0,
            radii: BTreeMap::new(),
        })
    }

    fn replay(&self, witness: &Witness) -> Result<f64, ModuliError> {
        match witness {
            Witness::Pair { x, u } => {
                let gx = self.g.apply(x)?;
                let gu = self.g.apply(u)?;
                Ok(self.quotient(x, &gx, u, &gu))
            }
            _ => Err(ModuliError::WitnessMismatch),
        }
    }
}

// ---------------------------------------------------------------------------
// Equi-continuity of a parametric family.

/// `sup ‖f(s,u) − f(t,u) − (f(s,x) − f(t,x))‖ / ‖x − u‖` over `x ≠ u` in a
/// lattice on `B[x̄, state_radius]` and `s` in a lattice on
/// `B[t, param_radius]`.
pub struct EquiContinuityOracle<'a> {
    f: &'a ParametricSingleValuedMap,
    t: Point,
    state_radius: f64,
    param_radius: f64,
    states: Vec<Point>,
    params: Vec<Point>,
    /// `f(s, x) − f(t, x)`, row-major in `(s, x)`, `m` values per entry.
    table: Vec<f64>,
    step: f64,
}

impl<'a> EquiContinuityOracle<'a> {
    pub fn new(
        f: &'a ParametricSingleValuedMap,
        t: &[f64],
        center: &[f64],
        state_radius: f64,
        param_radius: f64,
        state_per_side: usize,
        param_per_side: usize,
    ) -> Result<Self, ModuliError> {
        check_radius("state radius", state_radius)?;
        check_radius("param radius", param_radius)?;
        f.param_space().check(t)?;
        f.domain().check(center)?;
        let states = BallLattice::new(center.to_vec(), state_radius, state_per_side, f.domain().norm_kind())?
            .points();
        let params = BallLattice::new(t.to_vec(), param_radius, param_per_side, f.param_space().norm_kind())?
            .points();
        let m = f.range().dim();
        let mut table = vec![0.0; params.len() * states.len() * m];
        for (si, s) in params.iter().enumerate() {
            for (xi, x) in states.iter().enumerate() {
                let off = (si * states.len() + xi) * m;
                f.increment_into(s, t, x, &mut table[off..off + m]);
            }
        }
        let step = (state_radius / state_per_side.max(1) as f64).max(param_radius / param_per_side.max(1) as f64);
        Ok(Self {
            f,
            t: t.to_vec(),
            state_radius,
            param_radius,
            states,
            params,
            table,
            step,
        })
    }

    fn entry(&self, si: usize, xi: usize) -> &[f64] {
        let m = self.f.range().dim();
        let off = (si * self.states.len() + xi) * m;
        &self.table[off..off + m]
    }

    #[inline]
    fn quotient_of(&self, dx: &[f64], du: &[f64], x: &[f64], u: &[f64], scratch: &mut [f64]) -> f64 {
        let rnorm = self.f.range().norm_kind();
        for k in 0..scratch.len() {
            scratch[k] = du[k] - dx[k];
        }
        ratio(rnorm.of(scratch), self.f.domain().norm_kind().distance(x, u))
    }
}

impl Oracle for EquiContinuityOracle<'_> {
    fn kind(&self) -> EstimateKind {
        EstimateKind::EquiContinuity
    }

    fn estimate(&self) -> Result<ModulusEstimate, ModuliError> {
        let nx = self.states.len();
        let m = self.f.range().dim();
        let best = sweep_max(self.params.len() * nx, m, |k, scratch| {
            let (si, xi) = (k / nx, k % nx);
            let dx = self.entry(si, xi);
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for ui in xi + 1..nx {
                let q = self.quotient_of(dx, self.entry(si, ui), &self.states[xi], &self.states[ui], scratch);
                if q > best.0 {
                    best = (q, ui);
                }
            }
            Ok(best)
        })?;
        let witness = best.map(|b| Witness::ParamPair {
            s: self.params[b.index / nx].clone(),
            x: self.states[b.index % nx].clone(),
            u: self.states[b.aux].clone(),
        });
        let mut radii = BTreeMap::new();
        radii.insert("param_radius".into(), self.param_radius);
        Ok(ModulusEstimate {
            kind: EstimateKind::EquiContinuity,
            value: best.map_or(0.0, |b| b.value),
            witness,
            sample_count: self.params.len() * nx * nx.saturating_sub(1) / 2,
            grid_step: self.step,
            radius: self.state_radius,
            radii,
        })
    }

    fn replay(&self, witness: &Witness) -> Result<f64, ModuliError> {
        match witness {
            Witness::ParamPair { s, x, u } => {
                let dx = self.f.increment(s, &self.t, x)?;
                let du = self.f.increment(s, &self.t, u)?;
                let mut scratch = vec![0.0; dx.len()];
                Ok(self.quotient_of(&dx, &du, x, u, &mut scratch))
            }
            _ => Err(ModuliError::WitnessMismatch),
        }
    }
}

/// `sup ‖f(s, x̄) − f(t, x̄)‖` over a lattice on `B[t, radius]`: the
/// continuity modulus in the parameter at a fixed state.
pub fn parameter_oscillation(
    f: &ParametricSingleValuedMap,
    t: &[f64],
    center: &[f64],
    radius: f64,
    per_side: usize,
) -> Result<ModulusEstimate, ModuliError> {
    check_radius("radius", radius)?;
    f.param_space().check(t)?;
    f.domain().check(center)?;
    let params = BallLattice::new(t.to_vec(), radius, per_side, f.param_space().norm_kind())?;
    let m = f.range().dim();
    let rnorm = f.range().norm_kind();
    let best = sweep_max(params.len(), params.dim() + m, |i, buf| {
        let (s, d) = buf.split_at_mut(params.dim());
        params.point_into(i, s);
        f.increment_into(s, t, center, d);
        Ok((rnorm.of(d), 0))
    })?;
    Ok(ModulusEstimate {
        kind: EstimateKind::Continuity,
        value: best.map_or(0.0, |b| b.value),
        witness: best.map(|b| Witness::Param { s: params.point(b.index) }),
        sample_count: params.len(),
        grid_step: params.spacing(),
        radius,
        radii: BTreeMap::new(),
    })
}

// ---------------------------------------------------------------------------
// Free-function front ends.

/// Metric subregularity modulus at `(x̄, ȳ)`.
pub fn empirical_subreg_at(
    map: &SetValuedMap,
    center: &[f64],
    value: &[f64],
    radius: f64,
    step: f64,
) -> Result<ModulusEstimate, ModuliError> {
    SubregAtOracle::new(map, center, value, radius, Sweep::new(step))?.estimate()
}

/// Strong metric subregularity modulus at `(x̄, ȳ)`.
pub fn empirical_strong_at(
    map: &SetValuedMap,
    center: &[f64],
    value: &[f64],
    radius: f64,
    step: f64,
) -> Result<ModulusEstimate, ModuliError> {
    StrongAtOracle::new(map, center, value, radius, Sweep::new(step))?.estimate()
}

/// Strong metric subregularity modulus around `(x̄, ȳ)`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_strong_around(
    map: &SetValuedMap,
    center: &[f64],
    value: &[f64],
    a: f64,
    b: f64,
    r0: f64,
    step: f64,
) -> Result<ModulusEstimate, ModuliError> {
    StrongAroundOracle::new(map, center, value, a, b, r0, Sweep::new(step))?.estimate()
}

/// Verification radii `a/4, a/8, a/16`.
pub fn r0_ladder(a: f64) -> [f64; 3] {
    [a / 4.0, a / 8.0, a / 16.0]
}

/// [`empirical_strong_around`] at every radius of [`r0_ladder`].
pub fn strong_around_ladder(
    map: &SetValuedMap,
    center: &[f64],
    value: &[f64],
    a: f64,
    b: f64,
    step: f64,
) -> Result<Vec<ModulusEstimate>, ModuliError> {
    r0_ladder(a)
        .iter()
        .map(|r0| empirical_strong_around(map, center, value, a, b, *r0, step))
        .collect()
}

/// Calmness modulus of `g` at `x̄`.
pub fn empirical_calmness(
    g: &SingleValuedMap,
    center: &[f64],
    radius: f64,
    step: f64,
) -> Result<ModulusEstimate, ModuliError> {
    CalmnessOracle::new(g, center, radius, step)?.estimate()
}

/// Isolated calmness modulus of `G` at `(x̄, z̄)`.
pub fn empirical_isolated_calmness(
    map: &SetValuedMap,
    center: &[f64],
    anchor: &[f64],
    radius: f64,
    step: f64,
) -> Result<ModulusEstimate, ModuliError> {
    IsolatedCalmnessOracle::new(map, center, anchor, radius, Sweep::new(step))?.estimate()
}

/// Lipschitz constant of `g` over the grid.
pub fn empirical_lipschitz(g: &SingleValuedMap, grid: &Grid) -> Result<ModulusEstimate, ModuliError> {
    LipschitzOracle::new(g, grid)?.estimate()
}

/// Equi-continuity quotient with `x, u ∈ B[x̄, α]` and `s ∈ B[t, α]`.
pub fn equi_continuity_modulus(
    f: &ParametricSingleValuedMap,
    t: &[f64],
    center: &[f64],
    alpha: f64,
    step: f64,
) -> Result<ModulusEstimate, ModuliError> {
    Sweep::new(step).check()?;
    let per_side = per_side_for(alpha, step);
    EquiContinuityOracle::new(f, t, center, alpha, alpha, per_side, per_side)?.estimate()
}

/// Which estimator a divergence profile runs per radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    #[default]
    StrongAt,
    SubregAt,
}

/// One estimate per radius, each with grid step `radius / per_radius`.
pub fn divergence_profile(
    map: &SetValuedMap,
    center: &[f64],
    value: &[f64],
    radii: &[f64],
    per_radius: usize,
    mode: ProfileMode,
) -> Result<Vec<ModulusEstimate>, ModuliError> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] < w[0])) || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(ModuliError::Invalid("radii must be positive and strictly decreasing".into()));
    }
    if per_radius == 0 {
        return Err(ModuliError::Invalid("per_radius must be positive".into()));
    }
    radii
        .iter()
        .map(|&r| match mode {
            ProfileMode::StrongAt => {
                StrongAtOracle::with_per_side(map, center, value, r, per_radius)?.estimate()
            }
            ProfileMode::SubregAt => {
                SubregAtOracle::new(map, center, value, r, Sweep::new(r / per_radius as f64))?.estimate()
            }
        })
        .collect()
}

/// Ratios between consecutive profile values.
pub fn growth_factors(profile: &[ModulusEstimate]) -> Vec<f64> {
    profile.windows(2).map(|w| w[1].value / w[0].value).collect()
}
