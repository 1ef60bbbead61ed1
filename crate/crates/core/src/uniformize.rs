//! Uniform certificates for a parametric family `G_t(x) = f(t, x) + F(x)` on a
//! sampled compact set `Ω ⊂ P × X`.
//!
//! Each sample point gets a local record built from its own certificate with
//! the constants `μ = 1/(2κ)`, `κ' = 3κ`, `β = b/4`, an equi-continuity radius
//! `α` and a cover radius `r'`. A greedy pass over the open cover balls then
//! picks a finite subcover, and the uniform constants are the worst values
//! over the selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certificates::{
    certify_strong_around, certify_strong_at, CertError, StrongSubregAroundCert, StrongSubregAtCert,
};
use crate::maps::{MapError, ParametricSingleValuedMap, SetValuedMap};
use crate::moduli::{
    parameter_oscillation, EquiContinuityOracle, ModuliError, Oracle, StrongAroundOracle, StrongAtOracle, Sweep,
    Witness, CENTER_TOL,
};
use crate::serde_ext::extended;
use crate::spaces::Point;

/// Shrink factor applied to `κb` so the strict bound `α < κb` holds.
pub const CAP_SHRINK: f64 = 1.0 - 1.0 / (1u64 << 20) as f64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UniformizeError {
    #[error("sample point {index}: equi-continuity bound μ = {mu} not met down to radius {floor}")]
    EquiContinuity { index: usize, mu: f64, floor: f64 },
    #[error("sample point {index}: parameter oscillation bound {bound} not met down to radius {floor}")]
    Continuity { index: usize, bound: f64, floor: f64 },
    #[error("sample point {index}: {source}")]
    Certificate { index: usize, source: CertError },
    #[error("invalid sample: {0}")]
    Invalid(String),
    #[error(transparent)]
    Moduli(#[from] ModuliError),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// `G_t(x) = f(t, x) + F(x)`.
#[derive(Debug, Clone)]
pub struct Family {
    pub f: ParametricSingleValuedMap,
    pub inner: SetValuedMap,
}

impl Family {
    pub fn new(f: ParametricSingleValuedMap, inner: SetValuedMap) -> Result<Self, UniformizeError> {
        if f.domain() != inner.domain() || f.range() != inner.range() {
            return Err(UniformizeError::Invalid("family parts act on different spaces".into()));
        }
        Ok(Self { f, inner })
    }

    /// The member `G_t`.
    pub fn member(&self, t: &[f64]) -> Result<SetValuedMap, UniformizeError> {
        Ok(SetValuedMap::parametric_sum(&self.f, t, &self.inner)?)
    }

    pub fn zero(&self) -> Point {
        vec![0.0; self.f.range().dim()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub t: Point,
    pub x: Point,
}

/// Finite sample of a compact set `Ω ⊂ P × X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactSample {
    points: Vec<SamplePoint>,
    declared_cover_radius_floor: f64,
}

impl CompactSample {
    pub fn new(points: Vec<SamplePoint>, floor: f64) -> Result<Self, UniformizeError> {
        let first = points
            .first()
            .ok_or_else(|| UniformizeError::Invalid("empty compact sample".into()))?;
        let (pd, xd) = (first.t.len(), first.x.len());
        if points.iter().any(|p| p.t.len() != pd || p.x.len() != xd) {
            return Err(UniformizeError::Invalid("sample points of mixed dimensions".into()));
        }
        if points.iter().any(|p| p.t.iter().chain(&p.x).any(|v| !v.is_finite())) {
            return Err(UniformizeError::Invalid("non-finite sample coordinate".into()));
        }
        if !(floor > 0.0) || !floor.is_finite() {
            return Err(UniformizeError::Invalid(format!("radius floor must be positive, got {floor}")));
        }
        Ok(Self {
            points,
            declared_cover_radius_floor: floor,
        })
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn floor(&self) -> f64 {
        self.declared_cover_radius_floor
    }

    fn check_against(&self, family: &Family) -> Result<(), UniformizeError> {
        let p = &self.points[0];
        if p.t.len() != family.f.param_space().dim() || p.x.len() != family.f.domain().dim() {
            return Err(UniformizeError::Invalid(format!(
                "sample lives in ℝ^{} × ℝ^{}, family in ℝ^{} × ℝ^{}",
                p.t.len(),
                p.x.len(),
                family.f.param_space().dim(),
                family.f.domain().dim()
            )));
        }
        Ok(())
    }
}

/// Search parameters shared by the local constructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UniformizeOptions {
    /// Grid step of the brute-force oracles.
    pub step: f64,
    /// State window of the base around-certificates.
    pub base_a: f64,
    /// Range window of the base around-certificates.
    pub base_b: f64,
    /// Radius of the base at-certificates.
    pub base_alpha: f64,
    pub eta: f64,
    pub safety: f64,
    pub halvings: usize,
    /// Lattice density of the equi-continuity sweep in the state.
    pub state_per_side: usize,
    /// Lattice density of the equi-continuity sweep in the parameter.
    pub param_per_side: usize,
    /// Lattice density of the parameter-oscillation sweep.
    pub oscillation_per_side: usize,
    /// How far a sample point may sit off the graph of its member.
    pub center_tol: f64,
}

impl Default for UniformizeOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            base_a: 0.2,
            base_b: 0.2,
            base_alpha: 0.2,
            eta: crate::certificates::DEFAULT_ETA,
            safety: crate::certificates::DEFAULT_SAFETY,
            halvings: 20,
            state_per_side: 20,
            param_per_side: 4,
            oscillation_per_side: 20,
            center_tol: CENTER_TOL,
        }
    }
}

impl UniformizeOptions {
    fn sweep(&self) -> Sweep {
        Sweep::new(self.step).with_center_tol(self.center_tol)
    }
}

/// Per-point constants for the around mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalUniformRecord {
    pub index: usize,
    pub t: Point,
    pub x: Point,
    pub kappa_base: f64,
    pub a_base: f64,
    pub b_base: f64,
    pub mu: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    pub cover_radius: f64,
    pub equi_continuity: f64,
    pub oscillation: f64,
}

/// Per-point constants for the at mode; `beta` is the oscillation bound
/// used for the cover radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalAtRecord {
    pub index: usize,
    pub t: Point,
    pub x: Point,
    pub kappa_base: f64,
    pub alpha_base: f64,
    pub mu: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    pub cover_radius: f64,
    pub equi_continuity: f64,
    pub oscillation: f64,
}

/// One constant and one pair of neighborhoods for every sample point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformCert {
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
    pub subcover: Vec<usize>,
}

/// One constant and one radius for strong subregularity at every sample point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformAtCert {
    pub kappa: f64,
    pub c: f64,
    pub subcover: Vec<usize>,
}

/// Records plus the aggregated certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformReport {
    pub base: Vec<StrongSubregAroundCert>,
    pub records: Vec<LocalUniformRecord>,
    pub cert: UniformCert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformAtReport {
    pub base: Vec<StrongSubregAtCert>,
    pub records: Vec<LocalAtRecord>,
    pub cert: UniformAtCert,
}

struct Radii {
    alpha: f64,
    equi: f64,
    cover: f64,
    oscillation: f64,
}

/// Largest `α` on the halving ladder from `cap` whose equi-continuity
/// quotient over `B[x̄, 2α] × B[t, α]` is at most `μ`, then the largest `r'`
/// on the ladder from `α/2` with parameter oscillation at most `bound(α)`.
#[allow(clippy::too_many_arguments)]
fn search_radii(
    family: &Family,
    index: usize,
    point: &SamplePoint,
    mu: f64,
    cap: f64,
    bound: impl Fn(f64) -> f64,
    floor: f64,
    opts: &UniformizeOptions,
) -> Result<Radii, UniformizeError> {
    let mut found = None;
    let mut alpha = cap;
    for _ in 0..=opts.halvings {
        if alpha < floor {
            break;
        }
        let est = EquiContinuityOracle::new(
            &family.f,
            &point.t,
            &point.x,
            2.0 * alpha,
            alpha,
            opts.state_per_side,
            opts.param_per_side,
        )?
        .estimate()?;
        if est.value <= mu {
            found = Some((alpha, est.value));
            break;
        }
        alpha /= 2.0;
    }
    let (alpha, equi) = found.ok_or(UniformizeError::EquiContinuity { index, mu, floor })?;

    let limit = bound(alpha);
    let mut r = alpha / 2.0;
    for _ in 0..=opts.halvings {
        if r < floor {
            break;
        }
        let osc = parameter_oscillation(&family.f, &point.t, &point.x, r, opts.oscillation_per_side)?;
        if osc.value <= limit {
            return Ok(Radii {
                alpha,
                equi,
                cover: r,
                oscillation: osc.value,
            });
        }
        r /= 2.0;
    }
    Err(UniformizeError::Continuity {
        index,
        bound: limit,
        floor,
    })
}

/// Local record from an around-certificate of `G_t` at `(x̄, 0)` with
/// constants `(κ, a, b)`.
pub fn local_uniform_record(
    family: &Family,
    index: usize,
    point: &SamplePoint,
    base: &StrongSubregAroundCert,
    floor: f64,
    opts: &UniformizeOptions,
) -> Result<LocalUniformRecord, UniformizeError> {
    let kappa = base.kappa;
    let mu = 1.0 / (2.0 * kappa);
    let beta = base.b / 4.0;
    let cap = (base.a / 2.0).min(kappa * base.b * CAP_SHRINK);
    let radii = search_radii(family, index, point, mu, cap, |_| beta, floor, opts)?;
    Ok(LocalUniformRecord {
        index,
        t: point.t.clone(),
        x: point.x.clone(),
        kappa_base: kappa,
        a_base: base.a,
        b_base: base.b,
        mu,
        kappa: 3.0 * kappa,
        alpha: radii.alpha,
        beta,
        cover_radius: radii.cover,
        equi_continuity: radii.equi,
        oscillation: radii.oscillation,
    })
}

/// Local record from an at-certificate of `G_t` at `(x̄, 0)` with constants
/// `(κ, α)`.
pub fn local_at_record(
    family: &Family,
    index: usize,
    point: &SamplePoint,
    base: &StrongSubregAtCert,
    floor: f64,
    opts: &UniformizeOptions,
) -> Result<LocalAtRecord, UniformizeError> {
    let kappa = base.kappa;
    let mu = 1.0 / (2.0 * kappa);
    let kappa_prime = 3.0 * kappa;
    let radii = search_radii(
        family,
        index,
        point,
        mu,
        base.alpha / 2.0,
        |alpha| alpha / (2.0 * kappa_prime),
        floor,
        opts,
    )?;
    Ok(LocalAtRecord {
        index,
        t: point.t.clone(),
        x: point.x.clone(),
        kappa_base: kappa,
        alpha_base: base.alpha,
        mu,
        kappa: kappa_prime,
        alpha: radii.alpha,
        beta: radii.alpha / (2.0 * kappa_prime),
        cover_radius: radii.cover,
        equi_continuity: radii.equi,
        oscillation: radii.oscillation,
    })
}

/// Whether `p` lies in the open ball `B_P(t, r) × B_X(x, r)`.
fn in_cover(family: &Family, center: &SamplePoint, r: f64, p: &SamplePoint) -> bool {
    family.f.param_space().norm_kind().distance(&p.t, &center.t) < r
        && family.f.domain().norm_kind().distance(&p.x, &center.x) < r
}

/// Indices picked in ascending order, skipping points already covered.
fn greedy_indices(family: &Family, sample: &CompactSample, radii: &[f64]) -> Vec<usize> {
    let pts = sample.points();
    let mut selected: Vec<usize> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        if !selected.iter().any(|&j| in_cover(family, &pts[j], radii[j], p)) {
            selected.push(i);
        }
    }
    selected
}

/// Greedy finite subcover and the aggregated constants
/// `κ = max κ'ᵢ`, `a = min αᵢ`, `b = min βᵢ`.
pub fn greedy_subcover(
    family: &Family,
    sample: &CompactSample,
    records: &[LocalUniformRecord],
) -> Result<UniformCert, UniformizeError> {
    if records.len() != sample.len() {
        return Err(UniformizeError::Invalid(format!(
            "{} records for {} sample points",
            records.len(),
            sample.len()
        )));
    }
    let radii: Vec<f64> = records.iter().map(|r| r.cover_radius).collect();
    let subcover = greedy_indices(family, sample, &radii);
    let pick = |f: fn(&LocalUniformRecord) -> f64| subcover.iter().map(move |&i| f(&records[i]));
    Ok(UniformCert {
        kappa: pick(|r| r.kappa).fold(f64::NEG_INFINITY, f64::max),
        a: pick(|r| r.alpha).fold(f64::INFINITY, f64::min),
        b: pick(|r| r.beta).fold(f64::INFINITY, f64::min),
        subcover,
    })
}

/// At-mode counterpart of [`greedy_subcover`]: `κ = max κ'ᵢ`, `c = min αᵢ`.
pub fn greedy_subcover_at(
    family: &Family,
    sample: &CompactSample,
    records: &[LocalAtRecord],
) -> Result<UniformAtCert, UniformizeError> {
    if records.len() != sample.len() {
        return Err(UniformizeError::Invalid(format!(
            "{} records for {} sample points",
            records.len(),
            sample.len()
        )));
    }
    let radii: Vec<f64> = records.iter().map(|r| r.cover_radius).collect();
    let subcover = greedy_indices(family, sample, &radii);
    Ok(UniformAtCert {
        kappa: subcover.iter().map(|&i| records[i].kappa).fold(f64::NEG_INFINITY, f64::max),
        c: subcover.iter().map(|&i| records[i].alpha).fold(f64::INFINITY, f64::min),
        subcover,
    })
}

/// Whether every sample point lies in some selected open cover ball.
pub fn covers(family: &Family, sample: &CompactSample, radii: &[f64], subcover: &[usize]) -> bool {
    let pts = sample.points();
    pts.iter()
        .all(|p| subcover.iter().any(|&j| in_cover(family, &pts[j], radii[j], p)))
}

fn collect_indexed<T: Send>(
    n: usize,
    f: impl Fn(usize) -> Result<T, UniformizeError> + Sync + Send,
) -> Result<Vec<T>, UniformizeError> {
    (0..n).into_par_iter().map(f).collect()
}

/// Brute-force around-certificates of every member at its sample point.
pub fn base_around_certs(
    family: &Family,
    sample: &CompactSample,
    opts: &UniformizeOptions,
) -> Result<Vec<StrongSubregAroundCert>, UniformizeError> {
    sample.check_against(family)?;
    let zero = family.zero();
    collect_indexed(sample.len(), |i| {
        let p = &sample.points()[i];
        let g = family.member(&p.t)?;
        certify_strong_around(&g, &p.x, &zero, opts.base_a, opts.base_b, None, opts.sweep(), opts.eta)
            .map_err(|source| UniformizeError::Certificate { index: i, source })
    })
}

/// Brute-force at-certificates of every member at its sample point.
pub fn base_at_certs(
    family: &Family,
    sample: &CompactSample,
    opts: &UniformizeOptions,
) -> Result<Vec<StrongSubregAtCert>, UniformizeError> {
    sample.check_against(family)?;
    let zero = family.zero();
    collect_indexed(sample.len(), |i| {
        let p = &sample.points()[i];
        let g = family.member(&p.t)?;
        certify_strong_at(&g, &p.x, &zero, opts.base_alpha, opts.sweep(), opts.eta)
            .map_err(|source| UniformizeError::Certificate { index: i, source })
    })
}

/// Uniform around-certificate from given per-point certificates.
pub fn uniformize_with(
    family: &Family,
    sample: &CompactSample,
    base: Vec<StrongSubregAroundCert>,
    opts: &UniformizeOptions,
) -> Result<UniformReport, UniformizeError> {
    sample.check_against(family)?;
    if base.len() != sample.len() {
        return Err(UniformizeError::Invalid(format!(
            "{} certificates for {} sample points",
            base.len(),
            sample.len()
        )));
    }
    let records = collect_indexed(sample.len(), |i| {
        local_uniform_record(family, i, &sample.points()[i], &base[i], sample.floor(), opts)
    })?;
    let cert = greedy_subcover(family, sample, &records)?;
    Ok(UniformReport { base, records, cert })
}

/// Uniform around-certificate with brute-force base certificates.
pub fn uniformize(
    family: &Family,
    sample: &CompactSample,
    opts: &UniformizeOptions,
) -> Result<UniformReport, UniformizeError> {
    let base = base_around_certs(family, sample, opts)?;
    uniformize_with(family, sample, base, opts)
}

/// Uniform at-certificate from given per-point certificates.
pub fn uniformize_at_with(
    family: &Family,
    sample: &CompactSample,
    base: Vec<StrongSubregAtCert>,
    opts: &UniformizeOptions,
) -> Result<UniformAtReport, UniformizeError> {
    sample.check_against(family)?;
    if base.len() != sample.len() {
        return Err(UniformizeError::Invalid(format!(
            "{} certificates for {} sample points",
            base.len(),
            sample.len()
        )));
    }
    let records = collect_indexed(sample.len(), |i| {
        local_at_record(family, i, &sample.points()[i], &base[i], sample.floor(), opts)
    })?;
    let cert = greedy_subcover_at(family, sample, &records)?;
    Ok(UniformAtReport { base, records, cert })
}

/// Uniform at-certificate with brute-force base certificates.
pub fn uniformize_at(
    family: &Family,
    sample: &CompactSample,
    opts: &UniformizeOptions,
) -> Result<UniformAtReport, UniformizeError> {
    let base = base_at_certs(family, sample, opts)?;
    uniformize_at_with(family, sample, base, opts)
}

/// A sample point where the uniform claim failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    #[serde(with = "extended")]
    pub estimate: f64,
    pub witness: Option<Witness>,
    #[serde(with = "crate::serde_ext::extended_option")]
    pub replayed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformValidation {
    pub holds: bool,
    pub checked: usize,
    pub bound: f64,
    pub safety: f64,
    #[serde(with = "extended")]
    pub worst: f64,
    pub estimates: Vec<f64>,
    pub violations: Vec<Violation>,
}

fn summarize(
    results: Vec<(f64, Option<Witness>, Option<f64>)>,
    bound: f64,
    safety: f64,
) -> UniformValidation {
    let violations: Vec<Violation> = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.0 > bound * safety)
        .map(|(index, r)| Violation {
            index,
            estimate: r.0,
            witness: r.1.clone(),
            replayed: r.2,
        })
        .collect();
    UniformValidation {
        holds: violations.is_empty(),
        checked: results.len(),
        bound,
        safety,
        worst: results.iter().map(|r| r.0).fold(0.0, f64::max),
        estimates: results.iter().map(|r| r.0).collect(),
        violations,
    }
}

fn run(oracle: &dyn Oracle) -> Result<(f64, Option<Witness>, Option<f64>), UniformizeError> {
    let est = oracle.estimate()?;
    let replayed = match &est.witness {
        Some(w) => Some(oracle.replay(w)?),
        None => None,
    };
    Ok((est.value, est.witness, replayed))
}

/// Around-modulus of `G_t` at every `(t, x) ∈ Ω` on the uniform window
/// `(a, b)` with verification radius `a/4`, compared against `κ · safety`.
pub fn validate_uniform(
    cert: &UniformCert,
    family: &Family,
    sample: &CompactSample,
    opts: &UniformizeOptions,
) -> Result<UniformValidation, UniformizeError> {
    sample.check_against(family)?;
    let zero = family.zero();
    let results = collect_indexed(sample.len(), |i| {
        let p = &sample.points()[i];
        let g = family.member(&p.t)?;
        let oracle = StrongAroundOracle::new(&g, &p.x, &zero, cert.a, cert.b, cert.a / 4.0, opts.sweep())?;
        run(&oracle)
    })?;
    Ok(summarize(results, cert.kappa, opts.safety))
}

/// Strong-at modulus of `G_t` at every `(t, x) ∈ Ω` on `B[x, c]`.
pub fn validate_uniform_at(
    cert: &UniformAtCert,
    family: &Family,
    sample: &CompactSample,
    opts: &UniformizeOptions,
) -> Result<UniformValidation, UniformizeError> {
    sample.check_against(family)?;
    let zero = family.zero();
    let results = collect_indexed(sample.len(), |i| {
        let p = &sample.points()[i];
        let g = family.member(&p.t)?;
        let oracle = StrongAtOracle::new(&g, &p.x, &zero, cert.c, opts.sweep())?;
        run(&oracle)
    })?;
    Ok(summarize(results, cert.kappa, opts.safety))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::Provenance;
    use crate::maps::{ParamRule, Rule};
    use crate::spaces::{Norm, Space};
    use proptest::prelude::*;

    fn family(rule: ParamRule, inner: SetValuedMap) -> Family {
        let f = ParametricSingleValuedMap::new(rule, Space::line(), Space::line()).unwrap();
        Family::new(f, inner).unwrap()
    }

    fn identity_family() -> Family {
        family(ParamRule::Static { g: Rule::Zero }, SetValuedMap::identity(Space::line()))
    }

    fn around(kappa: f64, a: f64, b: f64) -> StrongSubregAroundCert {
        StrongSubregAroundCert {
            x_bar: vec![0.0],
            y_bar: vec![0.0],
            kappa,
            a,
            b,
            r0: a / 4.0,
            eta: 0.05,
            provenance: Provenance::default(),
        }
    }

    fn line_sample(ts: &[f64]) -> CompactSample {
        CompactSample::new(
            ts.iter().map(|&t| SamplePoint { t: vec![t], x: vec![0.0] }).collect(),
            1e-9,
        )
        .unwrap()
    }

    fn record(index: usize, t: f64, kappa: f64, alpha: f64, beta: f64, r: f64) -> LocalUniformRecord {
        LocalUniformRecord {
            index,
            t: vec![t],
            x: vec![0.0],
            kappa_base: kappa / 3.0,
            a_base: 2.0 * alpha,
            b_base: 4.0 * beta,
            mu: 1.5 / kappa,
            kappa,
            alpha,
            beta,
            cover_radius: r,
            equi_continuity: 0.0,
            oscillation: 0.0,
        }
    }

    #[test]
    fn proof_constants() {
        let fam = identity_family();
        let p = SamplePoint { t: vec![0.0], x: vec![0.0] };
        let r = local_uniform_record(&fam, 0, &p, &around(2.0, 4.0, 1.0), 1e-9, &UniformizeOptions::default())
            .unwrap();
        assert_eq!((r.mu, r.kappa, r.beta), (0.25, 6.0, 0.25));
        assert_eq!(r.alpha, 2.0 * CAP_SHRINK);
        assert!(r.cover_radius <= r.alpha / 2.0);
    }

    #[test]
    fn additive_parameter_takes_the_cap() {
        let fam = family(ParamRule::Shift { g: Rule::Identity }, SetValuedMap::identity(Space::line()));
        let p = SamplePoint { t: vec![0.0], x: vec![0.0] };
        let r = local_uniform_record(&fam, 0, &p, &around(1.0, 1.0, 1.0), 1e-9, &UniformizeOptions::default())
            .unwrap();
        assert_eq!(r.equi_continuity, 0.0);
        assert_eq!(r.alpha, 0.5);
        assert_eq!(r.oscillation, 0.25);
        assert_eq!(r.cover_radius, 0.25);
    }

    #[test]
    fn modulated_parameter_bounds_alpha() {
        let fam = family(ParamRule::Modulated { g: Rule::Identity }, SetValuedMap::identity(Space::line()));
        let p = SamplePoint { t: vec![0.0], x: vec![0.0] };
        let r = local_uniform_record(&fam, 0, &p, &around(2.0, 4.0, 1.0), 1e-9, &UniformizeOptions::default())
            .unwrap();
        assert_eq!(r.mu, 0.25);
        assert!(r.alpha <= 0.25 && r.alpha > 0.125, "{}", r.alpha);
        assert!(r.equi_continuity <= r.mu);
    }

    #[test]
    fn greedy_examples() {
        let fam = identity_family();
        let s = line_sample(&[0.0, 1.0, 2.0]);
        let recs = vec![
            record(0, 0.0, 3.0, 1.0, 0.5, 0.1),
            record(1, 1.0, 5.0, 0.8, 0.6, 0.1),
            record(2, 2.0, 4.0, 0.9, 0.4, 0.1),
        ];
        let c = greedy_subcover(&fam, &s, &recs).unwrap();
        assert_eq!(c.subcover, vec![0, 1, 2]);
        assert_eq!((c.kappa, c.a, c.b), (5.0, 0.8, 0.4));

        let one = line_sample(&[0.0]);
        let c = greedy_subcover(&fam, &one, &recs[..1]).unwrap();
        assert_eq!((c.kappa, c.a, c.b, c.subcover.clone()), (3.0, 1.0, 0.5, vec![0]));

        let near = line_sample(&[0.0, 0.05]);
        let recs = vec![record(0, 0.0, 3.0, 1.0, 0.5, 0.1), record(1, 0.05, 9.0, 0.1, 0.1, 0.1)];
        let c = greedy_subcover(&fam, &near, &recs).unwrap();
        assert_eq!(c.subcover, vec![0]);
        assert_eq!(c.kappa, 3.0);

        let edge = line_sample(&[0.0, 0.1]);
        let recs = vec![record(0, 0.0, 3.0, 1.0, 0.5, 0.1), record(1, 0.1, 3.0, 1.0, 0.5, 0.1)];
        assert_eq!(greedy_subcover(&fam, &edge, &recs).unwrap().subcover, vec![0, 1]);
    }

    #[test]
    fn identity_family_end_to_end() {
        let fam = identity_family();
        let s = line_sample(&[0.0, 0.5, 1.0]);
        let opts = UniformizeOptions::default();
        let rep = uniformize(&fam, &s, &opts).unwrap();
        assert!((rep.cert.kappa - 3.0 * 1.05).abs() < 1e-15);
        assert!(rep.cert.a > 0.0);
        let v = validate_uniform(&rep.cert, &fam, &s, &opts).unwrap();
        assert!(v.holds && v.violations.is_empty());

        let mut bad = rep.cert.clone();
        bad.kappa = rep.cert.kappa / 6.0;
        let v = validate_uniform(&bad, &fam, &s, &opts).unwrap();
        assert_eq!(v.violations.len(), 3);
        for viol in &v.violations {
            assert!(viol.witness.is_some());
            assert_eq!(viol.replayed, Some(viol.estimate));
        }
    }

    #[test]
    fn at_mode_constant_family() {
        let fam = identity_family();
        let s = line_sample(&[0.0, 0.5, 1.0]);
        let opts = UniformizeOptions::default();
        let rep = uniformize_at(&fam, &s, &opts).unwrap();
        assert!((rep.cert.kappa - 3.0 * 1.05).abs() < 1e-15);
        assert_eq!(rep.cert.c, opts.base_alpha / 2.0);
        assert!(validate_uniform_at(&rep.cert, &fam, &s, &opts).unwrap().holds);
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(CompactSample::new(vec![], 1e-3).is_err());
        let mixed = vec![
            SamplePoint { t: vec![0.0], x: vec![0.0] },
            SamplePoint { t: vec![0.0, 1.0], x: vec![0.0] },
        ];
        assert!(CompactSample::new(mixed, 1e-3).is_err());
        let fam = identity_family();
        let plane = CompactSample::new(vec![SamplePoint { t: vec![0.0], x: vec![0.0, 0.0] }], 1e-3).unwrap();
        assert!(uniformize(&fam, &plane, &UniformizeOptions::default()).is_err());
    }

    #[test]
    fn floor_stops_the_search() {
        let ncb = SetValuedMap::normal_cone_box(vec![[0.0, 1.0]], Norm::Sup).unwrap();
        let fam = family(ParamRule::Modulated { g: Rule::Identity }, ncb);
        let p = SamplePoint { t: vec![0.0], x: vec![0.0] };
        let err = local_uniform_record(&fam, 3, &p, &around(2.0, 4.0, 1.0), 1.0, &UniformizeOptions::default());
        assert!(matches!(err, Err(UniformizeError::EquiContinuity { index: 3, .. })));
    }

    proptest! {
        #[test]
        fn aggregation_and_cover(
            ts in proptest::collection::vec(0.0f64..1.0, 1..12),
            ks in proptest::collection::vec(1.0f64..10.0, 12),
            rs in proptest::collection::vec(0.01f64..0.3, 12),
            extra in 0.0f64..1.0,
        ) {
            let fam = identity_family();
            let recs: Vec<_> = ts.iter().enumerate()
                .map(|(i, &t)| record(i, t, ks[i], rs[i] * 2.0 + ks[i] / 100.0, ks[i] / 50.0, rs[i]))
                .collect();
            let s = line_sample(&ts);
            let c = greedy_subcover(&fam, &s, &recs).unwrap();
            let radii: Vec<f64> = recs.iter().map(|r| r.cover_radius).collect();
            prop_assert!(covers(&fam, &s, &radii, &c.subcover));
            for &i in &c.subcover {
                prop_assert!(c.kappa >= recs[i].kappa && c.a <= recs[i].alpha && c.b <= recs[i].beta);
            }
            prop_assert_eq!(&c, &greedy_subcover(&fam, &s, &recs).unwrap());

            let mut ts2 = ts.clone();
            ts2.push(extra);
            let mut recs2 = recs.clone();
            recs2.push(record(ts.len(), extra, ks[11], rs[11] * 2.0, ks[11] / 50.0, rs[11]));
            let c2 = greedy_subcover(&fam, &line_sample(&ts2), &recs2).unwrap();
            prop_assert!(c2.kappa >= c.kappa && c2.a <= c.a && c2.b <= c.b);
        }
    }
}
