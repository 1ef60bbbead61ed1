//! Path following for `p(t) ∈ f(t, x) + F(x)` on `t ∈ [0, T]`.
//!
//! Each node is solved by a derivative-free multi-resolution search around
//! the previous node. The computed trajectory is then certified by packing
//! the path into the parameter, `f̃((τ, y), x) = f(τ, x) − y`, and handing
//! the sample `{((tᵢ, p(tᵢ)), xᵢ)}` to [`crate::uniformize`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maps::{MapError, ParametricSingleValuedMap, SetValuedMap};
use crate::spaces::{BallLattice, Point, Sampling, SpaceError};
use crate::uniformize::{
    uniformize, uniformize_at, validate_uniform, validate_uniform_at, CompactSample, Family, SamplePoint,
    UniformAtReport, UniformReport, UniformValidation, UniformizeError, UniformizeOptions,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("invalid generalized equation: {0}")]
    Invalid(String),
    #[error("x = {x:?} is outside the domain at t = {t}")]
    OutOfDomain { t: f64, x: Point },
    #[error("initial point has residual {residual} > tol = {tol}")]
    InfeasibleStart { residual: f64, tol: f64 },
    #[error("warm start has infinite residual at t = {t}")]
    InfeasibleWarmStart { t: f64 },
    #[error("residual {residual} > tol after {depth} refinements at t = {t}")]
    Stall { t: f64, residual: f64, depth: usize },
    #[error("best point sits on the trust-region boundary with residual {residual} at t = {t}")]
    TrustRegionExhausted { t: f64, residual: f64 },
    #[error("step {step} exceeds the warm-start bound {bound} at t = {t}")]
    WarmStartViolation { t: f64, step: f64, bound: f64 },
    #[error("trajectory is not complete")]
    Incomplete,
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Uniformize(#[from] UniformizeError),
}

/// Right-hand side `t ↦ p(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathRule {
    Constant { value: Vec<f64> },
    /// `pᵢ(t) = Σₖ coefficients[i][k] tᵏ`
    Polynomial { coefficients: Vec<Vec<f64>> },
    /// `pᵢ(t) = amplitude[i] · sin(frequency · t + phase)`
    Sine { amplitude: Vec<f64>, frequency: f64, phase: f64 },
}

impl PathRule {
    pub fn dim(&self) -> usize {
        match self {
            PathRule::Constant { value } => value.len(),
            PathRule::Polynomial { coefficients } => coefficients.len(),
            PathRule::Sine { amplitude, .. } => amplitude.len(),
        }
    }

    pub fn eval(&self, t: f64) -> Point {
        match self {
            PathRule::Constant { value } => value.clone(),
            PathRule::Polynomial { coefficients } => coefficients
                .iter()
                .map(|c| c.iter().rev().fold(0.0, |acc, k| acc * t + k))
                .collect(),
            PathRule::Sine {
                amplitude,
                frequency,
                phase,
            } => {
                let s = (frequency * t + phase).sin();
                amplitude.iter().map(|a| a * s).collect()
            }
        }
    }

    /// Per-coordinate Lipschitz bounds of `p` on `[0, horizon]`.
    pub fn lipschitz_bounds(&self, horizon: f64) -> Vec<f64> {
        match self {
            PathRule::Constant { value } => vec![0.0; value.len()],
            PathRule::Polynomial { coefficients } => coefficients
                .iter()
                .map(|c| {
                    c.iter()
                        .enumerate()
                        .skip(1)
                        .map(|(k, ck)| k as f64 * ck.abs() * horizon.powi(k as i32 - 1))
                        .sum()
                })
                .collect(),
            PathRule::Sine {
                amplitude, frequency, ..
            } => amplitude.iter().map(|a| a.abs() * frequency.abs()).collect(),
        }
    }

    fn check(&self) -> Result<(), PathError> {
        let finite = match self {
            PathRule::Constant { value } => value.iter().all(|v| v.is_finite()),
            PathRule::Polynomial { coefficients } => coefficients.iter().flatten().all(|v| v.is_finite()),
            PathRule::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude.iter().all(|v| v.is_finite()) && frequency.is_finite() && phase.is_finite(),
        };
        if !finite {
            return Err(PathError::Invalid("non-finite path coefficient".into()));
        }
        Ok(())
    }
}

/// `p(t) ∈ f(t, x) + F(x)` on `t_steps` equally spaced nodes of `[0, T]`.
#[derive(Debug, Clone)]
pub struct ParametricGE {
    pub f: ParametricSingleValuedMap,
    pub inner: SetValuedMap,
    pub p: PathRule,
    pub horizon: f64,
    pub t_steps: usize,
}

impl ParametricGE {
    pub fn new(
        f: ParametricSingleValuedMap,
        inner: SetValuedMap,
        p: PathRule,
        horizon: f64,
        t_steps: usize,
    ) -> Result<Self, PathError> {
        if f.param_space().dim() != 1 {
            return Err(PathError::Invalid(format!(
                "time parameter must be scalar, got dimension {}",
                f.param_space().dim()
            )));
        }
        if f.domain() != inner.domain() || f.range() != inner.range() {
            return Err(PathError::Invalid("f and F act on different spaces".into()));
        }
        if p.dim() != f.range().dim() {
            return Err(PathError::Invalid(format!(
                "path has dimension {}, range has {}",
                p.dim(),
                f.range().dim()
            )));
        }
        p.check()?;
        if t_steps == 0 {
            return Err(PathError::Invalid("t_steps must be positive".into()));
        }
        if !(horizon >= 0.0) || !horizon.is_finite() || (t_steps > 1 && horizon == 0.0) {
            return Err(PathError::Invalid(format!("horizon {horizon} does not fit {t_steps} nodes")));
        }
        Ok(Self {
            f,
            inner,
            p,
            horizon,
            t_steps,
        })
    }

    /// Node times; the last one is exactly `T`.
    pub fn times(&self) -> Vec<f64> {
        if self.t_steps == 1 {
            return vec![0.0];
        }
        let n = self.t_steps - 1;
        (0..=n)
            .map(|i| if i == n { self.horizon } else { self.horizon * i as f64 / n as f64 })
            .collect()
    }

    pub fn dt(&self) -> f64 {
        if self.t_steps == 1 {
            0.0
        } else {
            self.horizon / (self.t_steps - 1) as f64
        }
    }

    /// `x ↦ f(t, x) + F(x)`.
    pub fn member(&self, t: f64) -> Result<SetValuedMap, PathError> {
        Ok(SetValuedMap::parametric_sum(&self.f, &[t], &self.inner)?)
    }

    /// Lipschitz bound of `p` on `[0, T]` in the range norm.
    pub fn path_lipschitz(&self) -> f64 {
        self.f.range().norm_kind().of(&self.p.lipschitz_bounds(self.horizon))
    }

    /// `dist(p(t), f(t, x) + F(x))`.
    pub fn residual(&self, t: f64, x: &[f64]) -> Result<f64, PathError> {
        let g = self.member(t)?;
        self.f.domain().check(x)?;
        if !g.in_domain(x) {
            return Err(PathError::OutOfDomain { t, x: x.to_vec() });
        }
        Ok(g.dist_to_image(x, &self.p.eval(t))?)
    }

    /// Parameter family with the path packed in: `f̃((τ, y), x) = f(τ, x) − y`.
    pub fn packed_family(&self) -> Result<Family, PathError> {
        Ok(Family::new(self.f.packed()?, self.inner.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Lattice points per side at each refinement level.
    pub per_side: usize,
    pub max_depth: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            per_side: 10,
            max_depth: 16,
        }
    }
}

/// Result of one local solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSolution {
    pub x: Point,
    pub residual: f64,
    pub depth: usize,
}

struct Search<'a> {
    g: SetValuedMap,
    target: Point,
    warm: &'a [f64],
    trust: f64,
    breaks: Vec<Vec<f64>>,
    t: f64,
}

impl Search<'_> {
    fn residual(&self, x: &[f64]) -> Result<f64, PathError> {
        if !self.g.in_domain(x) {
            return Ok(f64::INFINITY);
        }
        Ok(self.g.dist_unchecked(x, &self.target, None)?)
    }

    fn admissible(&self, x: &[f64]) -> bool {
        self.g.domain().norm_kind().distance(x, self.warm) <= self.trust
    }

    /// Incumbent with coordinates replaced by breakpoints within `radius`,
    /// in every combination.
    fn snapped(&self, center: &[f64], radius: f64) -> Vec<Point> {
        let choices: Vec<Vec<f64>> = center
            .iter()
            .zip(&self.breaks)
            .map(|(c, b)| {
                let mut v = vec![*c];
                v.extend(b.iter().copied().filter(|z| (z - c).abs() <= radius && z != c));
                v
            })
            .collect();
        if choices.iter().all(|c| c.len() == 1) {
            return Vec::new();
        }
        let mut out = vec![Vec::with_capacity(center.len())];
        for axis in &choices {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        out.remove(0);
        out
    }
}

/// Local solve of `p(t) ∈ f(t, x) + F(x)` in `B[x_warm, trust_radius]`.
///
/// The search starts from the warm point, evaluates a lattice on the ball
/// around the incumbent plus breakpoint-snapped copies of it, moves to the
/// best point and shrinks the ball by the lattice density, until the
/// residual is at most `tol`.
pub fn solve_step(
    ge: &ParametricGE,
    t: f64,
    x_warm: &[f64],
    trust_radius: f64,
    tol: f64,
    opts: &SolverOptions,
) -> Result<StepSolution, PathError> {
    if !(trust_radius > 0.0) || !trust_radius.is_finite() {
        return Err(PathError::Invalid(format!("trust radius must be positive, got {trust_radius}")));
    }
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(PathError::Invalid(format!("tolerance must be nonnegative, got {tol}")));
    }
    if opts.per_side == 0 {
        return Err(PathError::Invalid("per_side must be positive".into()));
    }
    ge.f.domain().check(x_warm)?;
    let g = ge.member(t)?;
    let search = Search {
        breaks: g.breakpoints(),
        g,
        target: ge.p.eval(t),
        warm: x_warm,
        trust: trust_radius,
        t,
    };
    let mut best = x_warm.to_vec();
    let mut best_r = search.residual(&best)?;
    if !best_r.is_finite() {
        return Err(PathError::InfeasibleWarmStart { t });
    }
    let norm = search.g.domain().norm_kind();
    let mut radius = trust_radius;
    let mut buf = vec![0.0; x_warm.len()];
    for depth in 0..=opts.max_depth {
        if best_r <= tol {
            return Ok(StepSolution {
                x: best,
                residual: best_r,
                depth,
            });
        }
        let lattice = BallLattice::new(best.clone(), radius, opts.per_side, norm)?;
        let mut next = best.clone();
        let mut next_r = best_r;
        let consider = |x: &[f64], next: &mut Point, next_r: &mut f64| -> Result<(), PathError> {
            if search.admissible(x) {
                let r = search.residual(x)?;
                if r < *next_r {
                    *next_r = r;
                    next.clear();
                    next.extend_from_slice(x);
                }
            }
            Ok(())
        };
        for q in search.snapped(&best, radius) {
            consider(&q, &mut next, &mut next_r)?;
        }
        for i in 0..lattice.len() {
            lattice.point_into(i, &mut buf);
            consider(&buf, &mut next, &mut next_r)?;
        }
        best = next;
        best_r = next_r;
        radius /= opts.per_side as f64;
    }
    if best_r <= tol {
        return Ok(StepSolution {
            x: best,
            residual: best_r,
            depth: opts.max_depth + 1,
        });
    }
    let to_edge = trust_radius - norm.distance(&best, x_warm);
    if to_edge <= trust_radius / opts.per_side as f64 {
        return Err(PathError::TrustRegionExhausted {
            t: search.t,
            residual: best_r,
        });
    }
    Err(PathError::Stall {
        t,
        residual: best_r,
        depth: opts.max_depth,
    })
}

/// A certified constant `κ'` asserting `‖x − x_warm‖ ≤ κ'(residual(x_warm) + tol)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarmStartBound {
    pub kappa: f64,
}

impl WarmStartBound {
    pub fn bound(&self, warm_residual: f64, tol: f64) -> f64 {
        self.kappa * warm_residual + self.kappa * tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FollowOptions {
    pub tol: f64,
    /// Fixed trust radius; derived from the attached bound when absent.
    pub trust_radius: Option<f64>,
    pub solver: SolverOptions,
    pub bound: Option<WarmStartBound>,
}

impl Default for FollowOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            trust_radius: None,
            solver: SolverOptions::default(),
            bound: None,
        }
    }
}

impl FollowOptions {
    /// The user radius, else `2κ'(Lip(p)·Δt + tol)`.
    pub fn trust_radius_for(&self, ge: &ParametricGE) -> Result<f64, PathError> {
        match (self.trust_radius, self.bound) {
            (Some(r), _) => Ok(r),
            (None, Some(b)) => Ok(2.0 * b.kappa * (ge.path_lipschitz() * ge.dt() + self.tol)),
            (None, None) => Err(PathError::Invalid(
                "a trust radius or a warm-start bound is required".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryNode {
    pub t: f64,
    pub x: Point,
    pub residual: f64,
    pub step_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Complete,
    /// The solve for node `index` failed; nodes before it are kept.
    Stalled { index: usize, t: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub nodes: Vec<TrajectoryNode>,
    pub status: TrajectoryStatus,
    pub tol: f64,
    pub trust_radius: f64,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.status == TrajectoryStatus::Complete
    }

    /// `max ‖xᵢ − exact(tᵢ)‖` in the domain norm.
    pub fn max_deviation(&self, ge: &ParametricGE, exact: impl Fn(f64) -> Point) -> f64 {
        let norm = ge.f.domain().norm_kind();
        self.nodes
            .iter()
            .map(|n| norm.distance(&n.x, &exact(n.t)))
            .fold(0.0, f64::max)
    }
}

/// Warm-started solves over the node times of `ge`, starting from `x0`.
pub fn follow(ge: &ParametricGE, x0: &[f64], opts: &FollowOptions) -> Result<Trajectory, PathError> {
    let r0 = ge.residual(0.0, x0)?;
    if !(r0 <= opts.tol) {
        return Err(PathError::InfeasibleStart {
            residual: r0,
            tol: opts.tol,
        });
    }
    let trust = opts.trust_radius_for(ge)?;
    if !(trust > 0.0) || !trust.is_finite() {
        return Err(PathError::Invalid(format!("trust radius must be positive, got {trust}")));
    }
    let norm = ge.f.domain().norm_kind();
    let times = ge.times();
    let mut nodes = vec![TrajectoryNode {
        t: 0.0,
        x: x0.to_vec(),
        residual: r0,
        step_norm: 0.0,
    }];
    for (index, &t) in times.iter().enumerate().skip(1) {
        let warm = nodes[index - 1].x.clone();
        let step = solve_step(ge, t, &warm, trust, opts.tol, &opts.solver).and_then(|s| {
            let step_norm = norm.distance(&s.x, &warm);
            if let Some(b) = opts.bound {
                let bound = b.bound(ge.residual(t, &warm)?, opts.tol);
                if step_norm > bound {
                    return Err(PathError::WarmStartViolation {
                        t,
                        step: step_norm,
                        bound,
                    });
                }
            }
            Ok((s, step_norm))
        });
        match step {
            Ok((s, step_norm)) => nodes.push(TrajectoryNode {
                t,
                x: s.x,
                residual: s.residual,
                step_norm,
            }),
            Err(e @ (PathError::Map(_) | PathError::Space(_) | PathError::Invalid(_))) => return Err(e),
            Err(e) => {
                return Ok(Trajectory {
                    nodes,
                    status: TrajectoryStatus::Stalled {
                        index,
                        t,
                        reason: e.to_string(),
                    },
                    tol: opts.tol,
                    trust_radius: trust,
                })
            }
        }
    }
    Ok(Trajectory {
        nodes,
        status: TrajectoryStatus::Complete,
        tol: opts.tol,
        trust_radius: trust,
    })
}

/// Indices `i ≥ 1` whose residual, recomputed from scratch, exceeds `tol`.
pub fn recheck_residuals(ge: &ParametricGE, traj: &Trajectory) -> Result<Vec<usize>, PathError> {
    let mut bad = Vec::new();
    for (i, n) in traj.nodes.iter().enumerate() {
        if !(ge.residual(n.t, &n.x)? <= traj.tol) {
            bad.push(i);
        }
    }
    Ok(bad)
}

/// Steps violating `‖xᵢ₊₁ − xᵢ‖ ≤ κ'·residual(tᵢ₊₁, xᵢ) + κ'·tol`.
pub fn warm_start_violations(
    ge: &ParametricGE,
    traj: &Trajectory,
    bound: WarmStartBound,
) -> Result<Vec<usize>, PathError> {
    let norm = ge.f.domain().norm_kind();
    let mut bad = Vec::new();
    for i in 1..traj.nodes.len() {
        let (prev, cur) = (&traj.nodes[i - 1], &traj.nodes[i]);
        let limit = bound.bound(ge.residual(cur.t, &prev.x)?, traj.tol);
        if norm.distance(&cur.x, &prev.x) > limit {
            bad.push(i);
        }
    }
    Ok(bad)
}

/// Uniform certificates along a trajectory, in both the around and the at
/// form, with the sample the packed family was checked on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCertificate {
    pub sample: CompactSample,
    pub around: UniformReport,
    pub at: UniformAtReport,
}

impl TrajectoryCertificate {
    pub fn warm_start_bound(&self) -> WarmStartBound {
        WarmStartBound {
            kappa: self.at.cert.kappa,
        }
    }
}

/// The sample `{((tᵢ, p(tᵢ)), xᵢ)}` of a trajectory.
pub fn trajectory_sample(ge: &ParametricGE, traj: &Trajectory, floor: f64) -> Result<CompactSample, PathError> {
    let points = traj
        .nodes
        .iter()
        .map(|n| {
            let mut t = vec![n.t];
            t.extend(ge.p.eval(n.t));
            SamplePoint { t, x: n.x.clone() }
        })
        .collect();
    Ok(CompactSample::new(points, floor)?)
}

fn packed_options(traj: &Trajectory, opts: &UniformizeOptions) -> UniformizeOptions {
    let mut o = opts.clone();
    o.center_tol = o.center_tol.max(traj.tol);
    o
}

/// Uniform certificates of the packed family along a complete trajectory.
pub fn certify_trajectory(
    ge: &ParametricGE,
    traj: &Trajectory,
    floor: f64,
    opts: &UniformizeOptions,
) -> Result<TrajectoryCertificate, PathError> {
    if !traj.is_complete() {
        return Err(PathError::Incomplete);
    }
    let family = ge.packed_family()?;
    let sample = trajectory_sample(ge, traj, floor)?;
    let opts = packed_options(traj, opts);
    let around = uniformize(&family, &sample, &opts)?;
    let at = uniformize_at(&family, &sample, &opts)?;
    Ok(TrajectoryCertificate { sample, around, at })
}

/// Brute-force check of both certificates at every node.
pub fn validate_trajectory_certificate(
    ge: &ParametricGE,
    traj: &Trajectory,
    cert: &TrajectoryCertificate,
    opts: &UniformizeOptions,
) -> Result<(UniformValidation, UniformValidation), PathError> {
    let family = ge.packed_family()?;
    let opts = packed_options(traj, opts);
    let around = validate_uniform(&cert.around.cert, &family, &cert.sample, &opts)?;
    let at = validate_uniform_at(&cert.at.cert, &family, &cert.sample, &opts)?;
    Ok((around, at))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{ParamRule, Rule};
    use crate::spaces::{Norm, Space};

    fn projection_ge(p: PathRule, horizon: f64, t_steps: usize) -> ParametricGE {
        let f = ParametricSingleValuedMap::new(ParamRule::Static { g: Rule::Identity }, Space::line(), Space::line())
            .unwrap();
        let ncb = SetValuedMap::normal_cone_box(vec![[0.0, 1.0]], Norm::Sup).unwrap();
        ParametricGE::new(f, ncb, p, horizon, t_steps).unwrap()
    }

    fn constant(v: f64) -> PathRule {
        PathRule::Constant { value: vec![v] }
    }

    #[test]
    fn residual_examples() {
        let ge = projection_ge(constant(0.5), 1.0, 2);
        assert_eq!(ge.residual(0.0, &[0.5]).unwrap(), 0.0);
        let ge = projection_ge(constant(1.5), 1.0, 2);
        assert_eq!(ge.residual(0.0, &[1.0]).unwrap(), 0.0);
        let ge = projection_ge(constant(-0.5), 1.0, 2);
        assert_eq!(ge.residual(0.0, &[0.5]).unwrap(), 1.0);
    }

    #[test]
    fn solve_step_hits_faces() {
        for (p, want) in [(1.5, 1.0), (0.25, 0.25), (-2.0, 0.0)] {
            let ge = projection_ge(constant(p), 1.0, 2);
            let s = solve_step(&ge, 0.0, &[0.5], 3.0, 1e-8, &SolverOptions::default()).unwrap();
            assert!((s.x[0] - want).abs() <= 1e-8, "p = {p}: {:?}", s.x);
            assert!(s.residual <= 1e-8);
        }
    }

    #[test]
    fn follow_clamp_path() {
        let p = PathRule::Sine {
            amplitude: vec![1.5],
            frequency: 1.0,
            phase: 0.0,
        };
        let ge = projection_ge(p, std::f64::consts::TAU, 200);
        let opts = FollowOptions {
            trust_radius: Some(0.5),
            ..FollowOptions::default()
        };
        let traj = follow(&ge, &[0.0], &opts).unwrap();
        assert!(traj.is_complete());
        assert_eq!(traj.nodes.len(), 200);
        assert_eq!(traj.nodes.last().unwrap().t, std::f64::consts::TAU);
        let dev = traj.max_deviation(&ge, |t| vec![(1.5 * t.sin()).clamp(0.0, 1.0)]);
        assert!(dev <= 1e-7, "{dev}");
        assert!(recheck_residuals(&ge, &traj).unwrap().is_empty());
        assert_eq!(traj, follow(&ge, &[0.0], &opts).unwrap());
    }

    #[test]
    fn constant_and_linear_paths() {
        let ge = projection_ge(constant(0.5), 1.0, 11);
        let opts = FollowOptions {
            trust_radius: Some(0.1),
            ..FollowOptions::default()
        };
        let traj = follow(&ge, &[0.5], &opts).unwrap();
        assert!(traj.nodes.iter().all(|n| n.x == vec![0.5]));

        let f = ParametricSingleValuedMap::new(ParamRule::Static { g: Rule::Zero }, Space::line(), Space::line())
            .unwrap();
        let p = PathRule::Polynomial {
            coefficients: vec![vec![0.0, 1.0]],
        };
        let ge = ParametricGE::new(f, SetValuedMap::identity(Space::line()), p, 1.0, 11).unwrap();
        let wide = FollowOptions {
            trust_radius: Some(0.2),
            ..FollowOptions::default()
        };
        let traj = follow(&ge, &[0.0], &wide).unwrap();
        assert!(traj.is_complete(), "{:?}", traj.status);
        for n in &traj.nodes {
            assert!((n.x[0] - n.t).abs() <= 1e-8);
        }
    }

    #[test]
    fn stalls_and_bad_starts() {
        let p = PathRule::Polynomial {
            coefficients: vec![vec![0.0, 1.0]],
        };
        let ge = projection_ge(p, 1.0, 11);
        let tiny = FollowOptions {
            trust_radius: Some(1e-12),
            ..FollowOptions::default()
        };
        let traj = follow(&ge, &[0.0], &tiny).unwrap();
        assert!(matches!(traj.status, TrajectoryStatus::Stalled { index: 1, .. }));
        assert_eq!(traj.nodes.len(), 1);

        assert!(matches!(
            follow(&ge, &[0.5], &FollowOptions::default()),
            Err(PathError::InfeasibleStart { .. })
        ));
        assert!(matches!(ge.residual(0.0, &[2.0]), Ok(r) if r.is_infinite()));
    }

    #[test]
    fn single_node_certificate_is_the_record() {
        let ge = projection_ge(constant(0.5), 0.0, 1);
        let traj = follow(
            &ge,
            &[0.5],
            &FollowOptions {
                trust_radius: Some(0.1),
                ..FollowOptions::default()
            },
        )
        .unwrap();
        assert_eq!(traj.nodes.len(), 1);
        let cert = certify_trajectory(&ge, &traj, 1e-9, &UniformizeOptions::default()).unwrap();
        let r = &cert.around.records[0];
        assert_eq!(cert.around.cert.subcover, vec![0]);
        assert_eq!((cert.around.cert.kappa, cert.around.cert.a, cert.around.cert.b), (r.kappa, r.alpha, r.beta));
    }

    #[test]
    fn identity_ge_certificate_constant() {
        let f = ParametricSingleValuedMap::new(ParamRule::Static { g: Rule::Zero }, Space::line(), Space::line())
            .unwrap();
        let p = PathRule::Polynomial {
            coefficients: vec![vec![0.0, 0.5]],
        };
        let ge = ParametricGE::new(f, SetValuedMap::identity(Space::line()), p, 1.0, 5).unwrap();
        let traj = follow(
            &ge,
            &[0.0],
            &FollowOptions {
                trust_radius: Some(0.5),
                ..FollowOptions::default()
            },
        )
        .unwrap();
        let opts = UniformizeOptions::default();
        let cert = certify_trajectory(&ge, &traj, 1e-9, &opts).unwrap();
        assert!((cert.around.cert.kappa - 3.0 * 1.05).abs() < 1e-15);
        let (a, b) = validate_trajectory_certificate(&ge, &traj, &cert, &opts).unwrap();
        assert!(a.holds && b.holds);
        assert!(warm_start_violations(&ge, &traj, cert.warm_start_bound()).unwrap().is_empty());
    }

    #[test]
    fn path_rules() {
        let p = PathRule::Polynomial {
            coefficients: vec![vec![1.0, 2.0, 3.0]],
        };
        assert_eq!(p.eval(2.0), vec![17.0]);
        assert_eq!(p.lipschitz_bounds(2.0), vec![14.0]);
        let s = PathRule::Sine {
            amplitude: vec![1.5, -2.0],
            frequency: 3.0,
            phase: 0.0,
        };
        assert_eq!(s.lipschitz_bounds(1.0), vec![4.5, 6.0]);
        let text = r#"{"type":"sine","amplitude":[1.5],"frequency":1.0,"phase":0.0}"#;
        assert!(serde_json::from_str::<PathRule>(text).is_ok());
        assert!(serde_json::from_str::<PathRule>(r#"{"type":"constant","value":[1],"x":2}"#).is_err());
    }
}
