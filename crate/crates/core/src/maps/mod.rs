//! Set-valued maps and their evaluation oracles.
//!
//! A [`SetValuedMap`] is a tree of [`Body`] nodes: catalog instances, finite
//! graph samples, and compositions (sums, range restrictions, scalings).
//! Every node evaluates to an exact [`ImageSet`], and distance queries through
//! sums are computed by translating the query point, so
//! `dist(y, (g + F)(x)) = dist(y − g(x), F(x))` holds bit for bit.

mod image;
mod rules;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use image::{ImageSet, Interval, IntervalUnion};
pub use rules::{paper_f, paper_g, paper_h, ParamRule, Rule};

use crate::serde_ext::strict_from_value;
use crate::spaces::{Ball, Grid, Norm, Point, Sampling, Space, SpaceError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("point {0:?} lies outside the declared domain")]
    OutOfDomain(Point),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("invalid map: {0}")]
    Invalid(String),
    #[error("map spec: {0}")]
    Spec(String),
}

/// Structure of a set-valued map.
#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    /// Single-valued map viewed as set-valued: `x ↦ {g(x)}`.
    Lift(Rule),
    /// Normal cone to the box `Π [lᵢ, uᵢ]`.
    NormalConeBox(Vec<[f64; 2]>),
    /// Finite list of graph pairs `(x, y)`.
    GraphSample(Vec<(Point, Point)>),
    /// `g(x) + F(x)`
    Sum { g: Rule, inner: Box<Body> },
    /// `f(t, x) + F(x)` at a fixed parameter `t`.
    ParametricSum {
        f: ParamRule,
        t: Point,
        inner: Box<Body>,
    },
    /// Minkowski sum `G(x) + F(x)` of two set-valued maps.
    SetSum { g: Box<Body>, inner: Box<Body> },
    /// `F(x) ∩ B[center, radius]`
    Restrict {
        inner: Box<Body>,
        center: Point,
        radius: f64,
    },
    /// `c · F(x)`
    Scaled { factor: f64, inner: Box<Body> },
    /// `x ↦ offset + μ‖x − center‖ · B`, the extreme map allowed by an
    /// isolated-calmness bound.
    CalmBall {
        center: Point,
        offset: Point,
        mu: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum BodyRepr {
    NormalConeBox {
        #[serde(rename = "box")]
        bounds: Vec<[f64; 2]>,
    },
    GraphSample {
        pairs: Vec<(Point, Point)>,
    },
    Sum {
        g: Rule,
        #[serde(rename = "F")]
        inner: Box<Body>,
    },
    ParametricSum {
        f: ParamRule,
        t: Point,
        #[serde(rename = "F")]
        inner: Box<Body>,
    },
    SetSum {
        #[serde(rename = "G")]
        g: Box<Body>,
        #[serde(rename = "F")]
        inner: Box<Body>,
    },
    Restrict {
        #[serde(rename = "F")]
        inner: Box<Body>,
        center: Point,
        radius: f64,
    },
    Scaled {
        factor: f64,
        #[serde(rename = "F")]
        inner: Box<Body>,
    },
    CalmBall {
        center: Point,
        offset: Point,
        mu: f64,
    },
}

const BODY_TAGS: &[&str] = &[
    "normal_cone_box",
    "graph_sample",
    "sum",
    "parametric_sum",
    "set_sum",
    "restrict",
    "scaled",
    "calm_ball",
];

impl Serialize for Body {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = match self.clone() {
            Body::Lift(rule) => return rule.serialize(s),
            Body::NormalConeBox(bounds) => BodyRepr::NormalConeBox { bounds },
            Body::GraphSample(pairs) => BodyRepr::GraphSample { pairs },
            Body::Sum { g, inner } => BodyRepr::Sum { g, inner },
            Body::ParametricSum { f, t, inner } => BodyRepr::ParametricSum { f, t, inner },
            Body::SetSum { g, inner } => BodyRepr::SetSum { g, inner },
            Body::Restrict {
                inner,
                center,
                radius,
            } => BodyRepr::Restrict {
                inner,
                center,
                radius,
            },
            Body::Scaled { factor, inner } => BodyRepr::Scaled { factor, inner },
            Body::CalmBall { center, offset, mu } => BodyRepr::CalmBall { center, offset, mu },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Body {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let v = Value::deserialize(d)?;
        let tag = v
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| D::Error::custom("map spec needs a string \"type\" field"))?;
        if BODY_TAGS.contains(&tag) {
            let repr: BodyRepr = serde_json::from_value(v).map_err(D::Error::custom)?;
            Ok(match repr {
                BodyRepr::NormalConeBox { bounds } => Body::NormalConeBox(bounds),
                BodyRepr::GraphSample { pairs } => Body::GraphSample(pairs),
                BodyRepr::Sum { g, inner } => Body::Sum { g, inner },
                BodyRepr::ParametricSum { f, t, inner } => Body::ParametricSum { f, t, inner },
                BodyRepr::SetSum { g, inner } => Body::SetSum { g, inner },
                BodyRepr::Restrict {
                    inner,
                    center,
                    radius,
                } => Body::Restrict {
                    inner,
                    center,
                    radius,
                },
                BodyRepr::Scaled { factor, inner } => Body::Scaled { factor, inner },
                BodyRepr::CalmBall { center, offset, mu } => Body::CalmBall { center, offset, mu },
            })
        } else {
            let rule: Rule = serde_json::from_value(v).map_err(D::Error::custom)?;
            Ok(Body::Lift(rule))
        }
    }
}

impl Body {
    fn breakpoints(&self, out: &mut [Vec<f64>]) {
        let mut scalar = Vec::new();
        match self {
            Body::Lift(g) | Body::Sum { g, .. } => g.kinks(&mut scalar),
            Body::ParametricSum { f, .. } => f.kinks(&mut scalar),
            Body::NormalConeBox(b) => {
                for (axis, [lo, hi]) in b.iter().enumerate() {
                    out[axis].extend([*lo, *hi]);
                }
            }
            Body::GraphSample(pairs) => {
                for (x, _) in pairs {
                    for (axis, v) in x.iter().enumerate() {
                        out[axis].push(*v);
                    }
                }
            }
            Body::CalmBall { center, .. } => {
                for (axis, v) in center.iter().enumerate() {
                    out[axis].push(*v);
                }
            }
            _ => {}
        }
        for axis in out.iter_mut() {
            axis.extend(&scalar);
        }
        match self {
            Body::Sum { inner, .. }
            | Body::ParametricSum { inner, .. }
            | Body::Restrict { inner, .. }
            | Body::Scaled { inner, .. } => inner.breakpoints(out),
            Body::SetSum { g, inner } => {
                g.breakpoints(out);
                inner.breakpoints(out);
            }
            _ => {}
        }
    }

    pub fn parse(text: &str) -> Result<Self, MapError> {
        let v: Value = serde_json::from_str(text).map_err(|e| MapError::Spec(e.to_string()))?;
        strict_from_value(v).map_err(MapError::Spec)
    }

    /// Canonical text form: fixed key order, shortest round-trip floats.
    pub fn to_canonical(&self) -> String {
        serde_json::to_string(self).expect("map bodies always serialize")
    }

    /// Domain and range dimensions forced by the body, if any.
    pub fn intrinsic_dims(&self) -> Option<(usize, usize)> {
        match self {
            Body::Lift(r) => r.intrinsic_dim().map(|d| (d, d)),
            Body::NormalConeBox(b) => Some((b.len(), b.len())),
            Body::GraphSample(pairs) => pairs.first().map(|(x, y)| (x.len(), y.len())),
            Body::Sum { g, inner } => inner
                .intrinsic_dims()
                .or_else(|| g.intrinsic_dim().map(|d| (d, d))),
            Body::ParametricSum { inner, .. } => inner.intrinsic_dims(),
            Body::SetSum { g, inner } => inner.intrinsic_dims().or_else(|| g.intrinsic_dims()),
            Body::Restrict { inner, center, .. } => inner
                .intrinsic_dims()
                .or(Some((center.len(), center.len()))),
            Body::Scaled { inner, .. } => inner.intrinsic_dims(),
            Body::CalmBall { center, offset, .. } => Some((center.len(), offset.len())),
        }
    }

    fn check(&self, n: usize, m: usize) -> Result<(), MapError> {
        let bad = |what: &str| Err(MapError::Invalid(what.to_string()));
        match self {
            Body::Lift(r) => {
                if n != m {
                    return bad("single-valued catalog maps need equal domain and range dimensions");
                }
                r.check_dim(n)
            }
            Body::NormalConeBox(bounds) => {
                if bounds.len() != n || n != m {
                    return bad("normal cone box dimension disagrees with the map's spaces");
                }
                for [lo, hi] in bounds {
                    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                        return bad("normal cone box needs finite bounds with nonempty interior");
                    }
                }
                Ok(())
            }
            Body::GraphSample(pairs) => {
                for (x, y) in pairs {
                    if x.len() != n || y.len() != m {
                        return bad("graph sample pair has the wrong dimensions");
                    }
                }
                Ok(())
            }
            Body::Sum { g, inner } => {
                if n != m {
                    return bad("sum with a single-valued map needs equal dimensions");
                }
                g.check_dim(n)?;
                inner.check(n, m)
            }
            Body::ParametricSum { f, t, inner } => {
                f.check_dims(t.len(), m)?;
                if n != m {
                    return bad("parametric sum needs equal dimensions");
                }
                inner.check(n, m)
            }
            Body::SetSum { g, inner } => {
                g.check(n, m)?;
                inner.check(n, m)
            }
            Body::Restrict {
                inner,
                center,
                radius,
            } => {
                if center.len() != m || !(*radius >= 0.0) {
                    return bad("restriction ball is malformed");
                }
                inner.check(n, m)
            }
            Body::Scaled { factor, inner } => {
                if *factor == 0.0 || !factor.is_finite() {
                    return bad("scaling factor must be finite and nonzero");
                }
                inner.check(n, m)
            }
            Body::CalmBall { center, offset, mu } => {
                if center.len() != n || offset.len() != m || !(*mu >= 0.0) {
                    return bad("calm ball is malformed");
                }
                Ok(())
            }
        }
    }

    fn eval(&self, x: &[f64], dnorm: Norm, rnorm: Norm) -> Result<ImageSet, MapError> {
        Ok(match self {
            Body::Lift(r) => ImageSet::singleton(r.apply(x)),
            Body::NormalConeBox(bounds) => {
                let mut factors = Vec::with_capacity(bounds.len());
                for (v, [lo, hi]) in x.iter().zip(bounds) {
                    let f = if v < lo || v > hi {
                        return Ok(ImageSet::Empty);
                    } else if v == hi {
                        Interval::new(0.0, f64::INFINITY)
                    } else if v == lo {
                        Interval::new(f64::NEG_INFINITY, 0.0)
                    } else {
                        Interval::point(0.0)
                    };
                    factors.push(IntervalUnion::single(f));
                }
                ImageSet::Product(factors)
            }
            Body::GraphSample(pairs) => ImageSet::Points(
                pairs
                    .iter()
                    .filter(|(px, _)| px.as_slice() == x)
                    .map(|(_, y)| y.clone())
                    .collect(),
            )
            .normalized(),
            Body::Sum { g, inner } => inner.eval(x, dnorm, rnorm)?.translate(&g.apply(x)),
            Body::ParametricSum { f, t, inner } => {
                inner.eval(x, dnorm, rnorm)?.translate(&f.apply(t, x))
            }
            Body::SetSum { g, inner } => {
                let a = g.eval(x, dnorm, rnorm)?;
                let b = inner.eval(x, dnorm, rnorm)?;
                a.minkowski_sum(b)?
            }
            Body::Restrict {
                inner,
                center,
                radius,
            } => {
                let ball = Ball::closed(center.clone(), *radius)?;
                inner.eval(x, dnorm, rnorm)?.intersect_ball(rnorm, &ball)?
            }
            Body::Scaled { factor, inner } => inner.eval(x, dnorm, rnorm)?.scale(*factor),
            Body::CalmBall { center, offset, mu } => {
                let rho = mu * dnorm.distance(x, center);
                if offset.len() > 1 && rnorm != Norm::Sup {
                    return Err(MapError::Unsupported(
                        "calm ball images are sup-norm boxes".into(),
                    ));
                }
                ImageSet::Product(
                    offset
                        .iter()
                        .map(|o| IntervalUnion::single(Interval::new(o - rho, o + rho)))
                        .collect(),
                )
            }
        })
    }

    /// `dist(y, F(x) ∩ ball)`; translations are pushed onto `y` and the ball.
    fn dist(
        &self,
        x: &[f64],
        y: &[f64],
        ball: Option<&Ball>,
        dnorm: Norm,
        rnorm: Norm,
    ) -> Result<f64, MapError> {
        let shifted = |shift: Point, inner: &Body| {
            let y2: Point = y.iter().zip(&shift).map(|(a, b)| a - b).collect();
            let ball2 = ball.map(|b| Ball {
                center: b.center.iter().zip(&shift).map(|(a, s)| a - s).collect(),
                radius: b.radius,
                open: b.open,
            });
            inner.dist(x, &y2, ball2.as_ref(), dnorm, rnorm)
        };
        if x.len() == 1 && y.len() == 1 {
            let window = ball.map(|b| (b.center[0], b.radius, b.open));
            if let Some(d) = self.dist_scalar(x[0], y[0], window) {
                return Ok(d);
            }
        }
        match self {
            Body::Sum { g, inner } => shifted(g.apply(x), inner),
            Body::ParametricSum { f, t, inner } => shifted(f.apply(t, x), inner),
            Body::Lift(r) if ball.is_none() => Ok(rnorm.distance(&r.apply(x), y)),
            _ => {
                let mut img = self.eval(x, dnorm, rnorm)?;
                if let Some(b) = ball {
                    img = img.intersect_ball(rnorm, b)?;
                }
                Ok(img.dist(rnorm, y))
            }
        }
    }
}

fn is_power_of_two(c: f64) -> bool {
    c.is_normal() && c.to_bits() & ((1u64 << 52) - 1) == 0
}

impl Body {
    /// Allocation-free `dist(y, F(x) ∩ B[c, r])` on the line. `None` when the
    /// body has no scalar path; the caller then falls back to image sets.
    fn dist_scalar(&self, x: f64, y: f64, window: Option<(f64, f64, bool)>) -> Option<f64> {
        let in_window = |p: f64| match window {
            None => true,
            Some((c, r, false)) => (p - c).abs() <= r,
            Some((c, r, true)) => (p - c).abs() < r,
        };
        let interval = |lo: f64, hi: f64| -> Option<f64> {
            let (lo, hi) = match window {
                None => (lo, hi),
                Some((_, _, true)) => return None,
                Some((c, r, false)) => (lo.max(c - r), hi.min(c + r)),
            };
            Some(if lo <= hi {
                Interval::new(lo, hi).dist(y)
            } else {
                f64::INFINITY
            })
        };
        match self {
            Body::Lift(rule) => {
                let p = rule.scalar_at(x)?;
                Some(if in_window(p) { (y - p).abs() } else { f64::INFINITY })
            }
            Body::NormalConeBox(bounds) => {
                let [lo, hi] = bounds[0];
                if x < lo || x > hi {
                    Some(f64::INFINITY)
                } else if x == hi {
                    interval(0.0, f64::INFINITY)
                } else if x == lo {
                    interval(f64::NEG_INFINITY, 0.0)
                } else {
                    interval(0.0, 0.0)
                }
            }
            Body::Sum { g, inner } => {
                let s = g.scalar_at(x)?;
                inner.dist_scalar(x, y - s, window.map(|(c, r, o)| (c - s, r, o)))
            }
            Body::ParametricSum { f, t, inner } => {
                let s = f.scalar_at(t, x)?;
                inner.dist_scalar(x, y - s, window.map(|(c, r, o)| (c - s, r, o)))
            }
            Body::CalmBall { center, offset, mu } => {
                let rho = mu * (x - center[0]).abs();
                interval(offset[0] - rho, offset[0] + rho)
            }
            // Division by a power of two is exact, so this agrees bitwise with
            // scaling the image.
            Body::Scaled { factor, inner } if is_power_of_two(*factor) => {
                let c = *factor;
                let d = inner.dist_scalar(x, y / c, window.map(|(w, r, o)| (w / c, r / c.abs(), o)))?;
                Some(d * c.abs())
            }
            _ => None,
        }
    }
}

/// Set-valued map `F: ℝⁿ ⇉ ℝᵐ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SetValuedMap {
    domain: Space,
    range: Space,
    domain_box: Option<Vec<[f64; 2]>>,
    body: Body,
}

impl SetValuedMap {
    pub fn new(body: Body, domain: Space, range: Space) -> Result<Self, MapError> {
        body.check(domain.dim(), range.dim())?;
        Ok(Self {
            domain,
            range,
            domain_box: None,
            body,
        })
    }

    /// Map whose domain and range are both `space`.
    pub fn square(body: Body, space: Space) -> Result<Self, MapError> {
        Self::new(body, space, space)
    }

    /// Dimensions inferred from the body (one when unconstrained).
    pub fn infer(body: Body, norm: Norm) -> Result<Self, MapError> {
        let (n, m) = body.intrinsic_dims().unwrap_or((1, 1));
        Self::new(body, Space::new(n, norm)?, Space::new(m, norm)?)
    }

    pub fn parse(text: &str, norm: Norm) -> Result<Self, MapError> {
        Self::infer(Body::parse(text)?, norm)
    }

    pub fn lift(rule: Rule, space: Space) -> Result<Self, MapError> {
        Self::square(Body::Lift(rule), space)
    }

    pub fn identity(space: Space) -> Self {
        Self::lift(Rule::Identity, space).expect("identity fits every space")
    }

    pub fn normal_cone_box(bounds: Vec<[f64; 2]>, norm: Norm) -> Result<Self, MapError> {
        let n = bounds.len();
        Self::square(Body::NormalConeBox(bounds), Space::new(n, norm)?)
    }

    pub fn graph_sample(pairs: Vec<(Point, Point)>, norm: Norm) -> Result<Self, MapError> {
        Self::infer(Body::GraphSample(pairs), norm)
    }

    /// Restricts evaluation to a box; queries outside it are errors.
    pub fn with_domain_box(mut self, bounds: Vec<[f64; 2]>) -> Result<Self, MapError> {
        if bounds.len() != self.domain.dim() {
            return Err(MapError::Invalid("domain box dimension".into()));
        }
        self.domain_box = Some(bounds);
        Ok(self)
    }

    /// `c · F`
    pub fn scaled(&self, factor: f64) -> Result<Self, MapError> {
        let body = Body::Scaled {
            factor,
            inner: Box::new(self.body.clone()),
        };
        Self::new(body, self.domain, self.range).map(|m| self.keep_box(m))
    }

    /// `F(·) ∩ B[center, radius]`
    pub fn restricted(&self, center: Point, radius: f64) -> Result<Self, MapError> {
        let body = Body::Restrict {
            inner: Box::new(self.body.clone()),
            center,
            radius,
        };
        Self::new(body, self.domain, self.range).map(|m| self.keep_box(m))
    }

    /// `G + F` for another set-valued map `G`.
    pub fn set_sum(g: &SetValuedMap, f: &SetValuedMap) -> Result<Self, MapError> {
        if g.domain != f.domain || g.range != f.range {
            return Err(MapError::Invalid("set-valued sum of maps on different spaces".into()));
        }
        let body = Body::SetSum {
            g: Box::new(g.body.clone()),
            inner: Box::new(f.body.clone()),
        };
        Self::new(body, f.domain, f.range).map(|m| f.keep_box(m))
    }

    /// `x ↦ f(t, x) + F(x)` for a fixed parameter.
    pub fn parametric_sum(
        f: &ParametricSingleValuedMap,
        t: &[f64],
        inner: &SetValuedMap,
    ) -> Result<Self, MapError> {
        f.param.check(t)?;
        if f.domain != inner.domain || f.range != inner.range {
            return Err(MapError::Invalid("parametric sum on mismatched spaces".into()));
        }
        let body = Body::ParametricSum {
            f: f.rule.clone(),
            t: t.to_vec(),
            inner: Box::new(inner.body.clone()),
        };
        Self::new(body, inner.domain, inner.range).map(|m| inner.keep_box(m))
    }

    fn keep_box(&self, mut m: Self) -> Self {
        m.domain_box = self.domain_box.clone();
        m
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    pub fn domain(&self) -> Space {
        self.domain
    }

    pub fn range(&self) -> Space {
        self.range
    }

    fn check_domain(&self, x: &[f64]) -> Result<(), MapError> {
        self.domain.check(x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(MapError::OutOfDomain(x.to_vec()));
        }
        if let Some(b) = &self.domain_box {
            if x.iter().zip(b).any(|(v, [lo, hi])| v < lo || v > hi) {
                return Err(MapError::OutOfDomain(x.to_vec()));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<ImageSet, MapError> {
        self.check_domain(x)?;
        self.body
            .eval(x, self.domain.norm_kind(), self.range.norm_kind())
    }

    /// `dist(y, F(x))`, `+∞` when `F(x) = ∅`.
    pub fn dist_to_image(&self, x: &[f64], y: &[f64]) -> Result<f64, MapError> {
        self.check_domain(x)?;
        self.range.check(y)?;
        self.body
            .dist(x, y, None, self.domain.norm_kind(), self.range.norm_kind())
    }

    /// `dist(y, F(x) ∩ ball)`, `+∞` when the intersection is empty.
    pub fn dist_to_restricted_image(&self, x: &[f64], y: &[f64], ball: &Ball) -> Result<f64, MapError> {
        self.check_domain(x)?;
        self.range.check(y)?;
        self.range.check(&ball.center)?;
        self.body
            .dist(x, y, Some(ball), self.domain.norm_kind(), self.range.norm_kind())
    }

    /// Unchecked distance for inner loops whose points were validated up front.
    #[inline]
    pub(crate) fn dist_unchecked(&self, x: &[f64], y: &[f64], ball: Option<&Ball>) -> Result<f64, MapError> {
        self.body
            .dist(x, y, ball, self.domain.norm_kind(), self.range.norm_kind())
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> Result<ImageSet, MapError> {
        self.body
            .eval(x, self.domain.norm_kind(), self.range.norm_kind())
    }

    /// Per-coordinate values where the map has a face, a kink or a domain
    /// edge, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<Vec<f64>> {
        let n = self.domain.dim();
        let mut out = vec![Vec::new(); n];
        self.body.breakpoints(&mut out);
        if let Some(b) = &self.domain_box {
            for (axis, [lo, hi]) in b.iter().enumerate() {
                out[axis].extend([*lo, *hi]);
            }
        }
        for axis in &mut out {
            axis.retain(|v| v.is_finite());
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        out
    }

    pub(crate) fn in_domain(&self, x: &[f64]) -> bool {
        self.check_domain(x).is_ok()
    }
}

impl Serialize for SetValuedMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.body.serialize(s)
    }
}

/// Single-valued map `g: ℝⁿ → ℝⁿ` from the catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleValuedMap {
    space: Space,
    rule: Rule,
}

impl SingleValuedMap {
    pub fn new(rule: Rule, space: Space) -> Result<Self, MapError> {
        rule.check_dim(space.dim())?;
        Ok(Self { space, rule })
    }

    pub fn line(rule: Rule) -> Result<Self, MapError> {
        Self::new(rule, Space::line())
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn apply(&self, x: &[f64]) -> Result<Point, MapError> {
        self.space.check(x)?;
        Ok(self.rule.apply(x))
    }

    /// The set-valued lift `x ↦ {g(x)}`.
    pub fn lift(&self) -> SetValuedMap {
        SetValuedMap::lift(self.rule.clone(), self.space).expect("validated rule")
    }
}

/// Parametric single-valued map `f: P × ℝⁿ → ℝⁿ` with `P = ℝᵏ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricSingleValuedMap {
    param: Space,
    domain: Space,
    range: Space,
    rule: ParamRule,
}

impl ParametricSingleValuedMap {
    pub fn new(rule: ParamRule, param: Space, space: Space) -> Result<Self, MapError> {
        rule.check_dims(param.dim(), space.dim())?;
        Ok(Self {
            param,
            domain: space,
            range: space,
            rule,
        })
    }

    pub fn rule(&self) -> &ParamRule {
        &self.rule
    }

    pub fn param_space(&self) -> Space {
        self.param
    }

    pub fn domain(&self) -> Space {
        self.domain
    }

    pub fn range(&self) -> Space {
        self.range
    }

    pub fn apply(&self, t: &[f64], x: &[f64]) -> Result<Point, MapError> {
        self.param.check(t)?;
        self.domain.check(x)?;
        Ok(self.rule.apply(t, x))
    }

    /// `f(s, x) − f(t, x)` with exact algebraic cancellation.
    pub fn increment(&self, s: &[f64], t: &[f64], x: &[f64]) -> Result<Point, MapError> {
        self.param.check(s)?;
        self.param.check(t)?;
        self.domain.check(x)?;
        let mut out = vec![0.0; self.range.dim()];
        self.rule.increment_into(s, t, x, &mut out);
        Ok(out)
    }

    #[inline]
    pub(crate) fn increment_into(&self, s: &[f64], t: &[f64], x: &[f64], out: &mut [f64]) {
        self.rule.increment_into(s, t, x, out)
    }

    /// Repacks the parameter as `(τ, y)` with `f̃((τ, y), x) = f(τ, x) − y`.
    /// The packed parameter space carries the product sup-metric.
    pub fn packed(&self) -> Result<Self, MapError> {
        let param = Space::new(self.param.dim() + self.range.dim(), Norm::Sup)?;
        Self::new(
            ParamRule::Packed {
                inner: Box::new(self.rule.clone()),
                inner_dim: self.param.dim(),
            },
            param,
            self.domain,
        )
    }
}

/// `F(x)`
pub fn evaluate(map: &SetValuedMap, x: &[f64]) -> Result<ImageSet, MapError> {
    map.evaluate(x)
}

/// `dist(y, F(x))`
pub fn dist_to_image(map: &SetValuedMap, x: &[f64], y: &[f64]) -> Result<f64, MapError> {
    map.dist_to_image(x, y)
}

/// `dist(y, F(x) ∩ ball)`
pub fn dist_to_restricted_image(
    map: &SetValuedMap,
    x: &[f64],
    y: &[f64],
    ball: &Ball,
) -> Result<f64, MapError> {
    map.dist_to_restricted_image(x, y, ball)
}

/// `g + F`
pub fn sum(g: &SingleValuedMap, map: &SetValuedMap) -> Result<SetValuedMap, MapError> {
    if g.space != map.domain || g.space != map.range {
        return Err(MapError::Invalid("sum of maps on different spaces".into()));
    }
    let body = Body::Sum {
        g: g.rule.clone(),
        inner: Box::new(map.body.clone()),
    };
    SetValuedMap::new(body, map.domain, map.range).map(|m| map.keep_box(m))
}

/// Grid approximation of `dist(x, F⁻¹(y))`: the distance from `x` to the
/// nearest grid point `u` with `dist(y, F(u)) ≤ membership_tol`; `+∞` if no
/// grid point qualifies.
pub fn inverse_dist(
    map: &SetValuedMap,
    y: &[f64],
    x: &[f64],
    grid: &Grid,
    membership_tol: f64,
) -> Result<f64, MapError> {
    map.domain.check(x)?;
    map.range.check(y)?;
    let norm = map.domain.norm_kind();
    let mut best = f64::INFINITY;
    for i in 0..grid.len() {
        let u = grid.point(i);
        if !map.in_domain(&u) {
            continue;
        }
        if map.dist_unchecked(&u, y, None)? <= membership_tol {
            best = best.min(norm.distance(&u, x));
        }
    }
    Ok(best)
}

/// Parses a map spec rejecting unknown keys anywhere in the document.
pub fn parse_body_value(v: Value) -> Result<Body, MapError> {
    strict_from_value(v).map_err(MapError::Spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line() -> Space {
        Space::line()
    }

    fn cone01() -> SetValuedMap {
        SetValuedMap::normal_cone_box(vec![[0.0, 1.0]], Norm::Sup).unwrap()
    }

    #[test]
    fn normal_cone_evaluation() {
        let n = cone01();
        assert_eq!(n.evaluate(&[0.5]).unwrap(), ImageSet::interval(0.0, 0.0));
        assert_eq!(n.evaluate(&[1.0]).unwrap(), ImageSet::interval(0.0, f64::INFINITY));
        assert_eq!(
            n.evaluate(&[0.0]).unwrap(),
            ImageSet::interval(f64::NEG_INFINITY, 0.0)
        );
        assert!(n.evaluate(&[2.0]).unwrap().is_empty());
        assert!(SetValuedMap::normal_cone_box(vec![[1.0, 1.0]], Norm::Sup).is_err());
    }

    #[test]
    fn paper_h_value() {
        let h = SetValuedMap::lift(Rule::PaperH, line()).unwrap();
        assert_eq!(h.evaluate(&[-0.1]).unwrap(), ImageSet::singleton(vec![0.1 * 0.1]));
    }

    #[test]
    fn distances() {
        let id = SetValuedMap::identity(line());
        assert_eq!(dist_to_image(&id, &[2.0], &[0.0]).unwrap(), 2.0);
        let n = cone01();
        assert_eq!(dist_to_image(&n, &[0.5], &[3.0]).unwrap(), 3.0);
        assert_eq!(dist_to_image(&n, &[2.0], &[1.0]).unwrap(), f64::INFINITY);

        let ball1 = Ball::closed(vec![0.0], 1.0).unwrap();
        assert_eq!(
            dist_to_restricted_image(&id, &[5.0], &[0.0], &ball1).unwrap(),
            f64::INFINITY
        );
        assert_eq!(dist_to_restricted_image(&id, &[0.5], &[0.5], &ball1).unwrap(), 0.0);
        let ball10 = Ball::closed(vec![0.0], 10.0).unwrap();
        assert_eq!(dist_to_restricted_image(&n, &[1.0], &[-1.0], &ball10).unwrap(), 1.0);
    }

    #[test]
    fn restricted_distance_matches_projection_oracle() {
        // dist(y, [0,∞) ∩ [c−r, c+r]) by clamping y into [max(0, c−r), c+r].
        let n = cone01();
        for (y, c, r) in [(-1.0, 0.0, 10.0), (12.0, 0.0, 10.0), (3.0, 5.0, 1.0), (0.3, -2.0, 1.0)] {
            let lo = f64::max(0.0, c - r);
            let hi = c + r;
            let expected = if lo > hi {
                f64::INFINITY
            } else {
                (y - f64::clamp(y, lo, hi)).abs()
            };
            let ball = Ball::closed(vec![c], r).unwrap();
            assert_eq!(n.dist_to_restricted_image(&[1.0], &[y], &ball).unwrap(), expected);
        }
    }

    #[test]
    fn sums() {
        let g = SingleValuedMap::line(Rule::PaperG).unwrap();
        let f = SetValuedMap::lift(Rule::PaperF, line()).unwrap();
        let h = SetValuedMap::lift(Rule::PaperH, line()).unwrap();
        let gf = sum(&g, &f).unwrap();
        for i in -100..=100 {
            let x = [i as f64 / 100.0];
            assert_eq!(gf.evaluate(&x).unwrap(), h.evaluate(&x).unwrap());
        }
        let zero = SingleValuedMap::line(Rule::Zero).unwrap();
        let n = cone01();
        assert_eq!(sum(&zero, &n).unwrap().evaluate(&[1.0]).unwrap(), n.evaluate(&[1.0]).unwrap());
        let one = SingleValuedMap::line(Rule::Constant { value: vec![1.0] }).unwrap();
        let id = SetValuedMap::identity(line());
        assert_eq!(sum(&one, &id).unwrap().evaluate(&[2.0]).unwrap(), ImageSet::singleton(vec![3.0]));
        let plane = SingleValuedMap::new(Rule::Identity, Space::new(2, Norm::Sup).unwrap()).unwrap();
        assert!(sum(&plane, &id).is_err());
    }

    #[test]
    fn inverse_distance() {
        let f = SetValuedMap::lift(Rule::PaperF, line()).unwrap();
        let grid = Grid::interval(-1.0, 1.0, 2001).unwrap();
        let d = inverse_dist(&f, &[0.0], &[0.3], &grid, 1e-12).unwrap();
        assert!((d - 0.3).abs() <= 1e-3, "{d}");
        let id = SetValuedMap::identity(line());
        assert_eq!(inverse_dist(&id, &[0.0], &[0.0], &grid, 1e-12).unwrap(), 0.0);
        let n = cone01();
        let wide = Grid::interval(-3.0, 3.0, 6001).unwrap();
        let d = inverse_dist(&n, &[0.0], &[2.0], &wide, 1e-12).unwrap();
        assert!((d - 1.0).abs() <= 1e-3, "{d}");
        let far = Grid::interval(5.0, 6.0, 3).unwrap();
        assert_eq!(inverse_dist(&n, &[0.0], &[2.0], &far, 1e-12).unwrap(), f64::INFINITY);
    }

    #[test]
    fn graph_sample_exact_match() {
        let g = SetValuedMap::graph_sample(
            vec![(vec![0.0], vec![1.0]), (vec![0.0], vec![2.0]), (vec![1.0], vec![5.0])],
            Norm::Sup,
        )
        .unwrap();
        assert_eq!(g.evaluate(&[0.0]).unwrap(), ImageSet::Points(vec![vec![1.0], vec![2.0]]));
        assert!(g.evaluate(&[0.5]).unwrap().is_empty());
        assert_eq!(g.dist_to_image(&[0.0], &[1.5]).unwrap(), 0.5);
    }

    #[test]
    fn domain_box_errors_instead_of_empty() {
        let id = SetValuedMap::identity(line()).with_domain_box(vec![[-1.0, 1.0]]).unwrap();
        assert!(matches!(id.evaluate(&[2.0]), Err(MapError::OutOfDomain(_))));
        assert!(matches!(id.evaluate(&[f64::NAN]), Err(MapError::OutOfDomain(_))));
        assert!(id.evaluate(&[0.5]).is_ok());
    }

    #[test]
    fn set_valued_perturbation_sum() {
        let id = SetValuedMap::identity(line());
        let g = SetValuedMap::square(
            Body::CalmBall {
                center: vec![0.0],
                offset: vec![0.0],
                mu: 0.25,
            },
            line(),
        )
        .unwrap();
        let s = SetValuedMap::set_sum(&g, &id).unwrap();
        assert_eq!(s.evaluate(&[1.0]).unwrap(), ImageSet::interval(0.75, 1.25));
        assert_eq!(s.dist_to_image(&[1.0], &[0.0]).unwrap(), 0.75);
    }

    #[test]
    fn spec_round_trip() {
        let text = r#"{"type":"sum","g":{"type":"paper_g"},"F":{"type":"normal_cone_box","box":[[0,1]]}}"#;
        let body = Body::parse(text).unwrap();
        let canon = body.to_canonical();
        assert_eq!(
            canon,
            r#"{"type":"sum","g":{"type":"paper_g"},"F":{"type":"normal_cone_box","box":[[0.0,1.0]]}}"#
        );
        assert_eq!(Body::parse(&canon).unwrap().to_canonical(), canon);

        let gs = r#"{"type":"graph_sample","pairs":[[[0.0],[1.0]]]}"#;
        assert_eq!(Body::parse(gs).unwrap().to_canonical(), gs);
    }

    #[test]
    fn spec_rejects_garbage() {
        assert!(Body::parse(r#"{"type":"identity","extra":1}"#).is_err());
        assert!(Body::parse(r#"{"type":"normal_cone_box","box":[[0,1]],"x":2}"#).is_err());
        assert!(Body::parse(r#"{"type":"no_such_map"}"#).is_err());
        assert!(Body::parse(r#"{"box":[[0,1]]}"#).is_err());
        assert!(Body::parse("not json").is_err());
    }

    fn catalog() -> Vec<SetValuedMap> {
        let l = line();
        vec![
            SetValuedMap::identity(l),
            SetValuedMap::lift(Rule::Cubic, l).unwrap(),
            SetValuedMap::lift(Rule::PaperF, l).unwrap(),
            SetValuedMap::lift(Rule::PaperG, l).unwrap(),
            SetValuedMap::lift(Rule::PaperH, l).unwrap(),
            SetValuedMap::lift(Rule::Scaling { factor: -2.5 }, l).unwrap(),
            cone01(),
            sum(&SingleValuedMap::line(Rule::Identity).unwrap(), &cone01()).unwrap(),
        ]
    }

    fn rules() -> Vec<Rule> {
        vec![
            Rule::Identity,
            Rule::Sin { amplitude: 0.5 },
            Rule::Cubic,
            Rule::PaperG,
            Rule::Scaling { factor: 3.0 },
        ]
    }

    proptest! {
        #[test]
        fn translation_identity(idx in 0usize..8, r in 0usize..5, x in -2.0..2.0f64, y in -3.0..3.0f64) {
            let f = &catalog()[idx];
            let g = SingleValuedMap::line(rules()[r].clone()).unwrap();
            let gf = sum(&g, f).unwrap();
            let gx = g.apply(&[x]).unwrap()[0];
            prop_assert_eq!(
                gf.dist_to_image(&[x], &[y]).unwrap().to_bits(),
                f.dist_to_image(&[x], &[y - gx]).unwrap().to_bits()
            );
        }

        #[test]
        fn scaled_fast_path_matches_image(idx in 0usize..8, k in -4i32..5, neg: bool, x in -2.0..2.0f64, y in -3.0..3.0f64) {
            let f = &catalog()[idx];
            let c = if neg { -(2f64.powi(k)) } else { 2f64.powi(k) };
            let scaled = f.scaled(c).unwrap();
            let img = f.evaluate(&[x]).unwrap().scale(c);
            prop_assert_eq!(
                scaled.dist_to_image(&[x], &[y]).unwrap().to_bits(),
                img.dist(Norm::Sup, &[y]).to_bits()
            );
        }

        #[test]
        fn restriction_never_decreases_distance(idx in 0usize..8, x in -2.0..2.0f64, y in -3.0..3.0f64, c in -2.0..2.0f64, r in 0.0..3.0f64) {
            let f = &catalog()[idx];
            let ball = Ball::closed(vec![c], r).unwrap();
            prop_assert!(f.dist_to_restricted_image(&[x], &[y], &ball).unwrap() >= f.dist_to_image(&[x], &[y]).unwrap());
        }

        #[test]
        fn sampled_graph_points_are_members(idx in 0usize..8, x in -2.0..2.0f64) {
            let f = &catalog()[idx];
            let window = Ball::closed(vec![0.0], 5.0).unwrap();
            let img = f.evaluate(&[x]).unwrap().intersect_ball(Norm::Sup, &window).unwrap();
            for y in img.sample(0.37).unwrap() {
                prop_assert_eq!(f.dist_to_image(&[x], &y).unwrap(), 0.0);
            }
        }
    }
}
