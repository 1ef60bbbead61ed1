//! Quantitative regularity certificates and their propagation rules.
//!
//! A certificate is an immutable claim (constant, center, radii) plus an
//! append-only provenance chain. Certificates enter the calculus either from
//! a brute-force estimate (`certify_*`) or from a propagation rule applied to
//! other certificates; `validate` checks any of them against the oracles in
//! [`crate::moduli`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maps::{MapError, SetValuedMap, SingleValuedMap};
use crate::moduli::{
    r0_ladder, CalmnessOracle, IsolatedCalmnessOracle, LipschitzOracle, ModuliError, ModulusEstimate, Oracle,
    StrongAroundOracle, StrongAtOracle, SubregAtOracle, Sweep, Witness,
};
use crate::serde_ext::extended;
use crate::spaces::{Grid, Point};

/// Default multiplicative slack on propagated constants.
pub const DEFAULT_ETA: f64 = 0.05;
/// Default discretization safety factor used by `validate`.
pub const DEFAULT_SAFETY: f64 = 1.1;
/// Constant assigned when a brute-force modulus is exactly zero.
pub const DEFAULT_KAPPA_FLOOR: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertError {
    #[error("κμ = {product} ≥ 1 (κ = {kappa}, μ = {mu})")]
    ProductTooLarge { kappa: f64, mu: f64, product: f64 },
    #[error("selection radius β = {beta} is not in (0, α] with α = {alpha}")]
    RadiusOutOfRange { beta: f64, alpha: f64 },
    #[error("infeasible radii: {0}")]
    Infeasible(String),
    #[error("‖g(x̄)‖ bound {bound} exceeds β = {beta}")]
    ValueBoundExceeded { bound: f64, beta: f64 },
    #[error("the perturbation bound is a calmness bound, not a Lipschitz bound")]
    NotLipschitz,
    #[error("estimated modulus is unbounded; no finite constant can be certified")]
    Unbounded { witness: Option<Witness> },
    #[error("invalid certificate data: {0}")]
    Invalid(String),
    #[error("subject does not match certificate kind {0}")]
    WrongSubject(&'static str),
    #[error(transparent)]
    Moduli(#[from] ModuliError),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// One rule application in a certificate's history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub rule: String,
    pub detail: String,
}

/// Append-only history of rule applications.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Provenance(Vec<ProvenanceEntry>);

impl Provenance {
    pub fn origin(rule: &str, detail: impl Into<String>) -> Self {
        Self(vec![ProvenanceEntry {
            rule: rule.into(),
            detail: detail.into(),
        }])
    }

    /// Copy of `self` with one more entry.
    pub fn then(&self, rule: &str, detail: impl Into<String>) -> Self {
        let mut out = self.0.clone();
        out.push(ProvenanceEntry {
            rule: rule.into(),
            detail: detail.into(),
        });
        Self(out)
    }

    /// Concatenation of two histories, `self` first.
    pub fn merged(&self, other: &Provenance, rule: &str, detail: impl Into<String>) -> Self {
        let mut out = self.0.clone();
        out.extend(other.0.iter().cloned());
        Self(out).then(rule, detail)
    }

    pub fn entries(&self) -> &[ProvenanceEntry] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `‖x − x̄‖ ≤ κ dist(ȳ, F(x))` on `B[x̄, α]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongSubregAtCert {
    pub x_bar: Point,
    pub y_bar: Point,
    pub kappa: f64,
    pub alpha: f64,
    pub eta: f64,
    pub provenance: Provenance,
}

/// `dist(x, F⁻¹(ȳ)) ≤ κ dist(ȳ, F(x))` on `B[x̄, radius]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubregAtCert {
    pub x_bar: Point,
    pub y_bar: Point,
    pub kappa: f64,
    pub radius: f64,
    pub eta: f64,
    pub provenance: Provenance,
}

/// For graph points `(x, y)` with `x ∈ B[x̄, a]`, `y ∈ B[ȳ, b]` and every
/// `u ∈ B[x, r₀]`: `‖u − x‖ ≤ κ dist(y, F(u) ∩ B[ȳ, b])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongSubregAroundCert {
    pub x_bar: Point,
    pub y_bar: Point,
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
    pub r0: f64,
    pub eta: f64,
    pub provenance: Provenance,
}

/// `‖g(x) − g(x̄)‖ ≤ μ‖x − x̄‖` on `B[x̄, radius]` and `‖g(x̄)‖ ≤ β₀`. With
/// `lipschitz` set the bound holds for every pair `x, u` of the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalmnessCert {
    pub x_bar: Point,
    pub mu: f64,
    pub radius: f64,
    pub beta0: f64,
    pub g_at_center: Point,
    pub lipschitz: bool,
    pub provenance: Provenance,
}

/// `G(x̄) = {z̄}` and `G(x) ⊂ z̄ + μ‖x − x̄‖ B` on `B[x̄, β]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolatedSelectionCert {
    pub x_bar: Point,
    pub z_bar: Point,
    pub mu: f64,
    pub beta: f64,
    pub provenance: Provenance,
}

/// Any certificate, tagged by kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    SubregAt(SubregAtCert),
    StrongAt(StrongSubregAtCert),
    StrongAround(StrongSubregAroundCert),
    Calmness(CalmnessCert),
    IsolatedSelection(IsolatedSelectionCert),
}

impl Certificate {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Certificate::SubregAt(_) => "subreg_at",
            Certificate::StrongAt(_) => "strong_at",
            Certificate::StrongAround(_) => "strong_around",
            Certificate::Calmness(_) => "calmness",
            Certificate::IsolatedSelection(_) => "isolated_selection",
        }
    }

    /// The certified constant (κ or μ).
    pub fn constant(&self) -> f64 {
        match self {
            Certificate::SubregAt(c) => c.kappa,
            Certificate::StrongAt(c) => c.kappa,
            Certificate::StrongAround(c) => c.kappa,
            Certificate::Calmness(c) => c.mu,
            Certificate::IsolatedSelection(c) => c.mu,
        }
    }

    /// Same certificate with its constant multiplied by `factor`.
    pub fn with_scaled_constant(&self, factor: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Certificate::SubregAt(c) => c.kappa *= factor,
            Certificate::StrongAt(c) => c.kappa *= factor,
            Certificate::StrongAround(c) => c.kappa *= factor,
            Certificate::Calmness(c) => c.mu *= factor,
            Certificate::IsolatedSelection(c) => c.mu *= factor,
        }
        out
    }
}

fn check_slack(eta: f64) -> Result<(), CertError> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(CertError::Invalid(format!("slack η must be positive and finite, got {eta}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<(), CertError> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(CertError::Invalid(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

/// `κ/(1 − κμ) · (1 + η)`; rejects `κμ ≥ 1`.
pub fn propagated_kappa(kappa: f64, mu: f64, eta: f64) -> Result<f64, CertError> {
    check_positive("κ", kappa)?;
    check_slack(eta)?;
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(CertError::Invalid(format!("μ must be nonnegative and finite, got {mu}")));
    }
    let product = kappa * mu;
    if product >= 1.0 {
        return Err(CertError::ProductTooLarge { kappa, mu, product });
    }
    Ok(kappa / (1.0 - kappa * mu) * (1.0 + eta))
}

/// Constant certified from a brute-force modulus: `κ̂ (1 + η)`, or `floor`
/// when `κ̂ = 0`.
pub fn constant_from_estimate(est: &ModulusEstimate, eta: f64, floor: f64) -> Result<f64, CertError> {
    check_slack(eta)?;
    if !est.value.is_finite() {
        return Err(CertError::Unbounded {
            witness: est.witness.clone(),
        });
    }
    Ok(if est.value == 0.0 {
        floor
    } else {
        est.value * (1.0 + eta)
    })
}

/// `g + F` is strongly subregular at `(x̄, ȳ + g(x̄))` with
/// `κ' = κ/(1 − κμ)·(1 + η)` on `B[x̄, min(α, radius of calmness)]`.
pub fn propagate_calm_perturbation(
    cert: &StrongSubregAtCert,
    calm: &CalmnessCert,
    eta: f64,
) -> Result<StrongSubregAtCert, CertError> {
    if cert.x_bar != calm.x_bar {
        return Err(CertError::Invalid("certificates anchored at different points".into()));
    }
    let kappa = propagated_kappa(cert.kappa, calm.mu, eta)?;
    let alpha = cert.alpha.min(calm.radius);
    let y_bar = cert.y_bar.iter().zip(&calm.g_at_center).map(|(y, g)| y + g).collect();
    Ok(StrongSubregAtCert {
        x_bar: cert.x_bar.clone(),
        y_bar,
        kappa,
        alpha,
        eta,
        provenance: cert.provenance.merged(
            &calm.provenance,
            "calm_perturbation",
            format!("kappa={} mu={} eta={eta} -> kappa'={kappa} alpha={alpha}", cert.kappa, calm.mu),
        ),
    })
}

/// `G + F` is strongly subregular at `(x̄, ȳ + z̄)` with
/// `κ' = κ/(1 − κμ)·(1 + η)` on `B[x̄, β]`.
pub fn propagate_setvalued_perturbation(
    cert: &StrongSubregAtCert,
    sel: &IsolatedSelectionCert,
    eta: f64,
) -> Result<StrongSubregAtCert, CertError> {
    if cert.x_bar != sel.x_bar {
        return Err(CertError::Invalid("certificates anchored at different points".into()));
    }
    if !(sel.beta > 0.0) || sel.beta > cert.alpha {
        return Err(CertError::RadiusOutOfRange {
            beta: sel.beta,
            alpha: cert.alpha,
        });
    }
    let kappa = propagated_kappa(cert.kappa, sel.mu, eta)?;
    let y_bar = cert.y_bar.iter().zip(&sel.z_bar).map(|(y, z)| y + z).collect();
    Ok(StrongSubregAtCert {
        x_bar: cert.x_bar.clone(),
        y_bar,
        kappa,
        alpha: sel.beta,
        eta,
        provenance: cert.provenance.merged(
            &sel.provenance,
            "setvalued_perturbation",
            format!("kappa={} mu={} beta={} eta={eta} -> kappa'={kappa}", cert.kappa, sel.mu, sel.beta),
        ),
    })
}

/// Window radii for a Lipschitz perturbation of an around-certificate:
/// `α = min(a/2, ρ)` and the largest `β` with `2β + μα ≤ b` in floating point.
pub fn around_radii(a: f64, b: f64, mu: f64, lip_radius: f64) -> Result<(f64, f64), CertError> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    check_positive("Lipschitz radius", lip_radius)?;
    let alpha = (a / 2.0).min(lip_radius);
    let mut beta = (b - mu * alpha) / 2.0;
    if !(beta > 0.0) {
        return Err(CertError::Infeasible(format!("(b − μα)/2 = {beta} ≤ 0 with b = {b}, μ = {mu}, α = {alpha}")));
    }
    while 2.0 * beta + mu * alpha > b {
        beta = beta.next_down();
    }
    if !(beta > 0.0) {
        return Err(CertError::Infeasible(format!("no positive β with 2β + μα ≤ b = {b}")));
    }
    Ok((alpha, beta))
}

/// `g + F` is strongly subregular around `(x̄, ȳ)` with `κ' = κ/(1 − κμ)(1 + η)`
/// on the window `(α, β)` from [`around_radii`].
pub fn propagate_around_perturbation(
    cert: &StrongSubregAroundCert,
    lip: &CalmnessCert,
    eta: f64,
) -> Result<StrongSubregAroundCert, CertError> {
    if cert.x_bar != lip.x_bar {
        return Err(CertError::Invalid("certificates anchored at different points".into()));
    }
    if !lip.lipschitz {
        return Err(CertError::NotLipschitz);
    }
    let kappa = propagated_kappa(cert.kappa, lip.mu, eta)?;
    let (alpha, beta) = around_radii(cert.a, cert.b, lip.mu, lip.radius)?;
    if lip.beta0 > beta {
        return Err(CertError::ValueBoundExceeded {
            bound: lip.beta0,
            beta,
        });
    }
    Ok(StrongSubregAroundCert {
        x_bar: cert.x_bar.clone(),
        y_bar: cert.y_bar.clone(),
        kappa,
        a: alpha,
        b: beta,
        r0: cert.r0.min(alpha),
        eta,
        provenance: cert.provenance.merged(
            &lip.provenance,
            "around_perturbation",
            format!(
                "kappa={} mu={} a={} b={} eta={eta} -> kappa'={kappa} alpha={alpha} beta={beta}",
                cert.kappa, lip.mu, cert.a, cert.b
            ),
        ),
    })
}

// ---------------------------------------------------------------------------
// Certificates from brute force.

/// Strong-at certificate from the oracle on `B[x̄, α]`.
pub fn certify_strong_at(
    map: &SetValuedMap,
    x_bar: &[f64],
    y_bar: &[f64],
    alpha: f64,
    sweep: Sweep,
    eta: f64,
) -> Result<StrongSubregAtCert, CertError> {
    let est = StrongAtOracle::new(map, x_bar, y_bar, alpha, sweep)?.estimate()?;
    let kappa = constant_from_estimate(&est, eta, DEFAULT_KAPPA_FLOOR)?;
    Ok(StrongSubregAtCert {
        x_bar: x_bar.to_vec(),
        y_bar: y_bar.to_vec(),
        kappa,
        alpha,
        eta,
        provenance: Provenance::origin(
            "brute_force_strong_at",
            format!("estimate={} step={} radius={alpha}", est.value, est.grid_step),
        ),
    })
}

/// Subregularity-at certificate from the oracle on `B[x̄, radius]`.
pub fn certify_subreg_at(
    map: &SetValuedMap,
    x_bar: &[f64],
    y_bar: &[f64],
    radius: f64,
    sweep: Sweep,
    eta: f64,
) -> Result<SubregAtCert, CertError> {
    let est = SubregAtOracle::new(map, x_bar, y_bar, radius, sweep)?.estimate()?;
    let kappa = constant_from_estimate(&est, eta, DEFAULT_KAPPA_FLOOR)?;
    Ok(SubregAtCert {
        x_bar: x_bar.to_vec(),
        y_bar: y_bar.to_vec(),
        kappa,
        radius,
        eta,
        provenance: Provenance::origin(
            "brute_force_subreg_at",
            format!("estimate={} step={} radius={radius}", est.value, est.grid_step),
        ),
    })
}

/// Around-certificate from the oracle with verification radius `r0`
/// (`a/4` when `None`).
#[allow(clippy::too_many_arguments)]
pub fn certify_strong_around(
    map: &SetValuedMap,
    x_bar: &[f64],
    y_bar: &[f64],
    a: f64,
    b: f64,
    r0: Option<f64>,
    sweep: Sweep,
    eta: f64,
) -> Result<StrongSubregAroundCert, CertError> {
    let r0 = r0.unwrap_or(r0_ladder(a)[0]);
    let est = StrongAroundOracle::new(map, x_bar, y_bar, a, b, r0, sweep)?.estimate()?;
    let kappa = constant_from_estimate(&est, eta, DEFAULT_KAPPA_FLOOR)?;
    Ok(StrongSubregAroundCert {
        x_bar: x_bar.to_vec(),
        y_bar: y_bar.to_vec(),
        kappa,
        a,
        b,
        r0,
        eta,
        provenance: Provenance::origin(
            "brute_force_strong_around",
            format!("estimate={} step={} a={a} b={b} r0={r0}", est.value, est.grid_step),
        ),
    })
}

fn box_grid(center: &[f64], radius: f64, step: f64) -> Result<Grid, CertError> {
    let per_axis = ((2.0 * radius / step) - 1e-9).ceil().max(1.0) as usize + 1;
    Ok(Grid::new(
        center.iter().map(|c| c - radius).collect(),
        center.iter().map(|c| c + radius).collect(),
        vec![per_axis; center.len()],
    )
    .map_err(ModuliError::from)?)
}

/// Calmness certificate of `g` at `x̄` from the oracle, `μ = μ̂ (1 + η)`,
/// `β₀ = ‖g(x̄)‖`.
pub fn certify_calmness(
    g: &SingleValuedMap,
    x_bar: &[f64],
    radius: f64,
    step: f64,
    eta: f64,
) -> Result<CalmnessCert, CertError> {
    let oracle = CalmnessOracle::new(g, x_bar, radius, step)?;
    let est = oracle.estimate()?;
    let mu = constant_from_estimate(&est, eta, 0.0)?;
    let g_at_center = oracle.value_at_center().to_vec();
    Ok(CalmnessCert {
        x_bar: x_bar.to_vec(),
        mu,
        radius,
        beta0: g.space().norm(&g_at_center).map_err(ModuliError::from)?,
        g_at_center,
        lipschitz: false,
        provenance: Provenance::origin(
            "brute_force_calmness",
            format!("estimate={} step={} radius={radius}", est.value, est.grid_step),
        ),
    })
}

/// Lipschitz certificate of `g` on the box around `x̄` of half-width `radius`.
pub fn certify_lipschitz(
    g: &SingleValuedMap,
    x_bar: &[f64],
    radius: f64,
    step: f64,
    eta: f64,
) -> Result<CalmnessCert, CertError> {
    check_positive("radius", radius)?;
    let grid = box_grid(x_bar, radius, step)?;
    let est = LipschitzOracle::new(g, &grid)?.estimate()?;
    let mu = constant_from_estimate(&est, eta, 0.0)?;
    let g_at_center = g.apply(x_bar)?;
    Ok(CalmnessCert {
        x_bar: x_bar.to_vec(),
        mu,
        radius,
        beta0: g.space().norm(&g_at_center).map_err(ModuliError::from)?,
        g_at_center,
        lipschitz: true,
        provenance: Provenance::origin(
            "brute_force_lipschitz",
            format!("estimate={} step={} radius={radius}", est.value, est.grid_step),
        ),
    })
}

/// Isolated-selection certificate of `G` at `(x̄, z̄)` on `B[x̄, β]`.
pub fn certify_isolated_selection(
    map: &SetValuedMap,
    x_bar: &[f64],
    z_bar: &[f64],
    beta: f64,
    sweep: Sweep,
    eta: f64,
) -> Result<IsolatedSelectionCert, CertError> {
    let est = IsolatedCalmnessOracle::new(map, x_bar, z_bar, beta, sweep)?.estimate()?;
    let mu = constant_from_estimate(&est, eta, 0.0)?;
    Ok(IsolatedSelectionCert {
        x_bar: x_bar.to_vec(),
        z_bar: z_bar.to_vec(),
        mu,
        beta,
        provenance: Provenance::origin(
            "brute_force_isolated_calmness",
            format!("estimate={} step={} beta={beta}", est.value, est.grid_step),
        ),
    })
}

// ---------------------------------------------------------------------------
// Validation.

/// What a certificate is checked against.
#[derive(Clone, Copy)]
pub enum Subject<'a> {
    SetValued(&'a SetValuedMap),
    SingleValued(&'a SingleValuedMap),
}

/// Outcome of checking a certificate against its oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub kind: String,
    pub holds: bool,
    #[serde(with = "extended")]
    pub worst_ratio: f64,
    pub bound: f64,
    pub safety: f64,
    pub witness: Option<Witness>,
    /// Ratio recomputed at the witness.
    #[serde(with = "crate::serde_ext::extended_option")]
    pub replayed: Option<f64>,
    pub estimate: ModulusEstimate,
    /// Extra conditions that failed (e.g. a value bound).
    pub notes: Vec<String>,
}

fn report(
    kind: &str,
    oracle: &dyn Oracle,
    bound: f64,
    safety: f64,
    mut notes: Vec<String>,
) -> Result<ValidationReport, CertError> {
    let est = oracle.estimate()?;
    let replayed = match &est.witness {
        Some(w) => Some(oracle.replay(w)?),
        None => None,
    };
    let mut holds = est.value <= bound * safety;
    if !holds {
        notes.push(format!("modulus {} exceeds {} × {}", est.value, bound, safety));
    }
    holds &= notes.is_empty();
    Ok(ValidationReport {
        kind: kind.into(),
        holds,
        worst_ratio: est.value,
        bound,
        safety,
        witness: est.witness.clone(),
        replayed,
        estimate: est,
        notes,
    })
}

/// Checks `cert` against the brute-force oracle of its kind: holds iff the
/// empirical modulus is at most the certified constant times `safety`.
pub fn validate(
    cert: &Certificate,
    subject: Subject<'_>,
    sweep: Sweep,
    safety: f64,
) -> Result<ValidationReport, CertError> {
    check_positive("safety", safety)?;
    match (cert, subject) {
        (Certificate::StrongAt(c), Subject::SetValued(map)) => {
            let o = StrongAtOracle::new(map, &c.x_bar, &c.y_bar, c.alpha, sweep)?;
            report("strong_at", &o, c.kappa, safety, Vec::new())
        }
        (Certificate::SubregAt(c), Subject::SetValued(map)) => {
            let o = SubregAtOracle::new(map, &c.x_bar, &c.y_bar, c.radius, sweep)?;
            report("subreg_at", &o, c.kappa, safety, Vec::new())
        }
        (Certificate::StrongAround(c), Subject::SetValued(map)) => {
            let o = StrongAroundOracle::new(map, &c.x_bar, &c.y_bar, c.a, c.b, c.r0, sweep)?;
            report("strong_around", &o, c.kappa, safety, Vec::new())
        }
        (Certificate::IsolatedSelection(c), Subject::SetValued(map)) => {
            let o = IsolatedCalmnessOracle::new(map, &c.x_bar, &c.z_bar, c.beta, sweep)?;
            report("isolated_selection", &o, c.mu, safety, Vec::new())
        }
        (Certificate::Calmness(c), Subject::SingleValued(g)) => {
            let gx = g.apply(&c.x_bar)?;
            let norm = g.space().norm(&gx).map_err(ModuliError::from)?;
            let mut notes = Vec::new();
            if norm > c.beta0 {
                notes.push(format!("‖g(x̄)‖ = {norm} exceeds β₀ = {}", c.beta0));
            }
            if c.lipschitz {
                let grid = box_grid(&c.x_bar, c.radius, sweep.step)?;
                let o = LipschitzOracle::new(g, &grid)?;
                report("lipschitz", &o, c.mu, safety, notes)
            } else {
                let o = CalmnessOracle::new(g, &c.x_bar, c.radius, sweep.step)?;
                report("calmness", &o, c.mu, safety, notes)
            }
        }
        (c, _) => Err(CertError::WrongSubject(c.kind_name())),
    }
}
