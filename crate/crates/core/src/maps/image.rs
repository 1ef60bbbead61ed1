use serde::{Deserialize, Serialize};

use super::MapError;
use crate::spaces::{Ball, Norm, Point};

/// Closed interval with possibly infinite endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "crate::serde_ext::extended")]
    pub lo: f64,
    #[serde(with = "crate::serde_ext::extended")]
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    #[inline]
    pub fn dist(&self, y: f64) -> f64 {
        if y < self.lo {
            self.lo - y
        } else if y > self.hi {
            y - self.hi
        } else {
            0.0
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

/// Finite union of closed intervals, kept sorted and pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalUnion(Vec<Interval>);

impl IntervalUnion {
    pub fn new(mut parts: Vec<Interval>) -> Self {
        parts.retain(|p| p.lo <= p.hi);
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len());
        for p in parts {
            match merged.last_mut() {
                Some(last) if p.lo <= last.hi => last.hi = last.hi.max(p.hi),
                _ => merged.push(p),
            }
        }
        Self(merged)
    }

    pub fn single(i: Interval) -> Self {
        Self(vec![i])
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn dist(&self, y: f64) -> f64 {
        self.0
            .iter()
            .map(|i| i.dist(y))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn translate(&self, d: f64) -> Self {
        Self(
            self.0
                .iter()
                .map(|i| Interval::new(i.lo + d, i.hi + d))
                .collect(),
        )
    }

    /// `c·A` for `c ≠ 0`.
    pub fn scale(&self, c: f64) -> Self {
        let parts = self
            .0
            .iter()
            .map(|i| {
                if c > 0.0 {
                    Interval::new(c * i.lo, c * i.hi)
                } else {
                    Interval::new(c * i.hi, c * i.lo)
                }
            })
            .collect();
        Self::new(parts)
    }

    pub fn intersect(&self, lo: f64, hi: f64) -> Self {
        Self(
            self.0
                .iter()
                .filter_map(|i| {
                    let a = i.lo.max(lo);
                    let b = i.hi.min(hi);
                    (a <= b).then(|| Interval::new(a, b))
                })
                .collect(),
        )
    }

    /// Minkowski sum.
    pub fn add(&self, other: &Self) -> Self {
        let mut parts = Vec::with_capacity(self.0.len() * other.0.len());
        for a in &self.0 {
            for b in &other.0 {
                parts.push(Interval::new(a.lo + b.lo, a.hi + b.hi));
            }
        }
        Self::new(parts)
    }

    /// Points of a bounded union: both endpoints of every interval plus
    /// uniformly spaced interior points no farther than `step` apart.
    fn sample(&self, step: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for i in &self.0 {
            if i.lo == i.hi {
                out.push(i.lo);
                continue;
            }
            let k = ((i.hi - i.lo) / step - 1e-9).ceil().max(1.0) as usize;
            for j in 0..=k {
                let v = if j == k {
                    i.hi
                } else {
                    i.lo + (j as f64 / k as f64) * (i.hi - i.lo)
                };
                out.push(v);
            }
        }
        out
    }
}

/// Value of a set-valued map at one point.
///
/// `Product` is a coordinatewise product of interval unions; in one
/// dimension it is simply an interval union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum ImageSet {
    Empty,
    Points(Vec<Point>),
    Product(Vec<IntervalUnion>),
}

impl ImageSet {
    pub fn singleton(y: Point) -> Self {
        ImageSet::Points(vec![y])
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        ImageSet::Product(vec![IntervalUnion::single(Interval::new(lo, hi))])
    }

    /// Collapses degenerate encodings to `Empty`.
    pub fn normalized(self) -> Self {
        match self {
            ImageSet::Points(p) if p.is_empty() => ImageSet::Empty,
            ImageSet::Product(f) if f.iter().any(IntervalUnion::is_empty) => ImageSet::Empty,
            other => other,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, ImageSet::Empty)
    }

    /// `dist(y, self)`; `+∞` for the empty set.
    #[inline]
    pub fn dist(&self, norm: Norm, y: &[f64]) -> f64 {
        match self {
            ImageSet::Empty => f64::INFINITY,
            ImageSet::Points(pts) => pts
                .iter()
                .map(|p| norm.distance(p, y))
                .fold(f64::INFINITY, f64::min),
            ImageSet::Product(factors) => {
                norm.combine(factors.iter().zip(y).map(|(f, v)| f.dist(*v)))
            }
        }
    }

    pub fn contains(&self, norm: Norm, y: &[f64]) -> bool {
        self.dist(norm, y) == 0.0
    }

    pub fn translate(self, d: &[f64]) -> Self {
        match self {
            ImageSet::Empty => ImageSet::Empty,
            ImageSet::Points(pts) => ImageSet::Points(
                pts.into_iter()
                    .map(|p| p.iter().zip(d).map(|(a, b)| a + b).collect())
                    .collect(),
            ),
            ImageSet::Product(f) => {
                ImageSet::Product(f.iter().zip(d).map(|(u, v)| u.translate(*v)).collect())
            }
        }
    }

    pub fn scale(self, c: f64) -> Self {
        match self {
            ImageSet::Empty => ImageSet::Empty,
            ImageSet::Points(pts) => ImageSet::Points(
                pts.into_iter()
                    .map(|p| p.iter().map(|v| c * v).collect())
                    .collect(),
            ),
            ImageSet::Product(f) => ImageSet::Product(f.iter().map(|u| u.scale(c)).collect()),
        }
    }

    /// `self ∩ ball`. Products are only intersected exactly with sup-norm
    /// balls (or on the line).
    pub fn intersect_ball(self, norm: Norm, ball: &Ball) -> Result<Self, MapError> {
        Ok(match self {
            ImageSet::Empty => ImageSet::Empty,
            ImageSet::Points(pts) => {
                ImageSet::Points(pts.into_iter().filter(|p| ball.contains(norm, p)).collect())
                    .normalized()
            }
            ImageSet::Product(f) => {
                if f.len() > 1 && norm != Norm::Sup {
                    return Err(MapError::Unsupported(
                        "intersecting a product image with a non-sup ball".into(),
                    ));
                }
                if ball.open {
                    return Err(MapError::Unsupported(
                        "intersecting an interval image with an open ball".into(),
                    ));
                }
                let out = f
                    .iter()
                    .zip(&ball.center)
                    .map(|(u, c)| u.intersect(c - ball.radius, c + ball.radius))
                    .collect();
                ImageSet::Product(out).normalized()
            }
        })
    }

    /// Minkowski sum of two images.
    pub fn minkowski_sum(self, other: Self) -> Result<Self, MapError> {
        use ImageSet::*;
        Ok(match (self, other) {
            (Empty, _) | (_, Empty) => Empty,
            (Points(a), Points(b)) => {
                let mut out = Vec::with_capacity(a.len() * b.len());
                for p in &a {
                    for q in &b {
                        out.push(p.iter().zip(q).map(|(x, y)| x + y).collect());
                    }
                }
                Points(out)
            }
            (Points(a), prod @ Product(_)) | (prod @ Product(_), Points(a)) => {
                if a.len() == 1 {
                    prod.translate(&a[0])
                } else {
                    let Product(f) = prod else { unreachable!() };
                    if f.len() != 1 {
                        return Err(MapError::Unsupported(
                            "sum of a multi-point image and a product in dimension > 1".into(),
                        ));
                    }
                    let parts = a
                        .iter()
                        .flat_map(|p| f[0].translate(p[0]).0)
                        .collect();
                    Product(vec![IntervalUnion::new(parts)])
                }
            }
            (Product(a), Product(b)) => Product(a.iter().zip(&b).map(|(u, v)| u.add(v)).collect()),
        }
        .normalized())
    }

    /// Finite sample of a bounded image; used to enumerate graph points.
    pub fn sample(&self, step: f64) -> Result<Vec<Point>, MapError> {
        match self {
            ImageSet::Empty => Ok(Vec::new()),
            ImageSet::Points(p) => Ok(p.clone()),
            ImageSet::Product(f) => {
                if f.iter().any(|u| u.0.iter().any(|i| !i.is_bounded())) {
                    return Err(MapError::Unsupported("sampling an unbounded image".into()));
                }
                let axes: Vec<Vec<f64>> = f.iter().map(|u| u.sample(step)).collect();
                let mut out = vec![Vec::with_capacity(axes.len())];
                for axis in &axes {
                    let mut next = Vec::with_capacity(out.len() * axis.len());
                    for prefix in &out {
                        for v in axis {
                            let mut p = prefix.clone();
                            p.push(*v);
                            next.push(p);
                        }
                    }
                    out = next;
                }
                Ok(out)
            }
        }
    }
}
