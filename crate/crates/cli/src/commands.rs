use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use serde::Serialize;
use serde_json::json;

use subreg_core::certificates::{
    certify_calmness, certify_isolated_selection, certify_lipschitz, certify_strong_around, certify_strong_at,
    propagate_around_perturbation, propagate_calm_perturbation, propagate_setvalued_perturbation, validate,
    CalmnessCert, CertError, Certificate, IsolatedSelectionCert, Provenance, StrongSubregAroundCert,
    StrongSubregAtCert, Subject, ValidationReport,
};
use subreg_core::maps::{sum, Body, Rule};
use subreg_core::moduli::{self, r0_ladder, ModulusEstimate, Sweep};
use subreg_core::pathfollow::{
    certify_trajectory, follow, recheck_residuals, validate_trajectory_certificate, warm_start_violations,
    ParametricGE, PathError, TrajectoryStatus,
};
use subreg_core::report::{
    write_at_records_csv, write_profile_csv, write_records_csv, write_trajectory_csv, write_validation_csv,
};
use subreg_core::uniformize::{
    uniformize, uniformize_at, validate_uniform, validate_uniform_at, CompactSample, Family, UniformizeError,
};
use subreg_core::{Grid, Norm, ParametricSingleValuedMap, SetValuedMap, SingleValuedMap, Space};

use crate::config::{
    BaseSpec, CertifyConfig, CounterexampleConfig, EstimateConfig, EstimateRequest, FollowConfig, PerturbationSpec,
    UniformMode, UniformizeConfig,
};

/// How a run ended when it did not hit a usage error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Confirmed,
    Violated,
}

impl Outcome {
    fn from_holds(holds: bool) -> Self {
        if holds {
            Outcome::Confirmed
        } else {
            Outcome::Violated
        }
    }
}

/// Invalid input; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Run-time overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub eta: Option<f64>,
    pub tol: Option<f64>,
}

pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path(name);
        Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        let p = self.path(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    }
}

fn space(dim: usize, norm: Norm) -> Result<Space> {
    Space::new(dim, norm).map_err(|e| usage(e.to_string()))
}

fn set_valued(body: &Body, dim: usize, norm: Norm) -> Result<SetValuedMap> {
    SetValuedMap::square(body.clone(), space(dim, norm)?).map_err(|e| usage(e.to_string()))
}

fn single_valued(rule: &Rule, dim: usize, norm: Norm) -> Result<SingleValuedMap> {
    SingleValuedMap::new(rule.clone(), space(dim, norm)?).map_err(|e| usage(e.to_string()))
}

fn check_dims(center: &[f64], value: &[f64]) -> Result<()> {
    if center.is_empty() || center.len() != value.len() {
        return Err(usage(format!(
            "center has dimension {}, value has {}",
            center.len(),
            value.len()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// estimate

pub fn estimate(cfg: &EstimateConfig, out: &Output) -> Result<Outcome> {
    check_dims(&cfg.center, &cfg.value)?;
    let n = cfg.center.len();
    let map = set_valued(&cfg.map, n, cfg.norm)?;
    let mut results = Vec::new();
    for (i, req) in cfg.estimates.iter().enumerate() {
        let est: Vec<ModulusEstimate> = match req {
            EstimateRequest::SubregAt { radius, step } => {
                vec![moduli::empirical_subreg_at(&map, &cfg.center, &cfg.value, *radius, *step)?]
            }
            EstimateRequest::StrongAt { radius, step } => {
                vec![moduli::empirical_strong_at(&map, &cfg.center, &cfg.value, *radius, *step)?]
            }
            EstimateRequest::StrongAround { a, b, r0, step } => {
                let r0 = r0.unwrap_or(r0_ladder(*a)[0]);
                vec![moduli::empirical_strong_around(&map, &cfg.center, &cfg.value, *a, *b, r0, *step)?]
            }
            EstimateRequest::Calmness { radius, step } => {
                let g = lifted_rule(&cfg.map)?;
                vec![moduli::empirical_calmness(&single_valued(g, n, cfg.norm)?, &cfg.center, *radius, *step)?]
            }
            EstimateRequest::Lipschitz { radius, step } => {
                let g = single_valued(lifted_rule(&cfg.map)?, n, cfg.norm)?;
                let per_axis = ((2.0 * radius / step).round() as usize).max(1) + 1;
                let grid = Grid::new(
                    cfg.center.iter().map(|c| c - radius).collect(),
                    cfg.center.iter().map(|c| c + radius).collect(),
                    vec![per_axis; n],
                )
                .map_err(|e| usage(e.to_string()))?;
                vec![moduli::empirical_lipschitz(&g, &grid)?]
            }
            EstimateRequest::IsolatedCalmness { anchor, radius, step } => {
                vec![moduli::empirical_isolated_calmness(&map, &cfg.center, anchor, *radius, *step)?]
            }
            EstimateRequest::DivergenceProfile {
                radii,
                per_radius,
                mode,
            } => {
                let profile =
                    moduli::divergence_profile(&map, &cfg.center, &cfg.value, radii, *per_radius, *mode)?;
                write_profile_csv(out.create(&format!("profile_{i}.csv"))?, &profile)?;
                profile
            }
        };
        results.push(json!({ "request": req, "estimates": est }));
    }
    out.json("estimates.json", &json!({ "config": cfg, "results": results }))?;
    Ok(Outcome::Confirmed)
}

fn lifted_rule(body: &Body) -> Result<&Rule> {
    match body {
        Body::Lift(rule) => Ok(rule),
        _ => Err(usage("calmness and Lipschitz estimates need a single-valued map")),
    }
}

// ---------------------------------------------------------------------------
// certify

#[derive(Serialize)]
struct Checked {
    certificate: Certificate,
    validation: ValidationReport,
}

fn hypothesis_error(e: &CertError) -> bool {
    matches!(
        e,
        CertError::ProductTooLarge { .. }
            | CertError::RadiusOutOfRange { .. }
            | CertError::Infeasible(_)
            | CertError::ValueBoundExceeded { .. }
            | CertError::NotLipschitz
            | CertError::Invalid(_)
            | CertError::WrongSubject(_)
    )
}

/// Maps certificate errors to usage errors unless they are a failed claim.
fn cert<T>(r: Result<T, CertError>) -> Result<Result<T, CertError>> {
    match r {
        Err(e) if hypothesis_error(&e) => Err(usage(e.to_string())),
        Err(CertError::Moduli(e)) => Err(usage(e.to_string())),
        Err(CertError::Map(e)) => Err(usage(e.to_string())),
        other => Ok(other),
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(usage(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

pub fn certify(cfg: &CertifyConfig, eta: f64, out: &Output) -> Result<Outcome> {
    check_dims(&cfg.center, &cfg.value)?;
    check_positive("eta", eta)?;
    check_positive("kappa_scale", cfg.kappa_scale)?;
    let n = cfg.center.len();
    let map = set_valued(&cfg.map, n, cfg.norm)?;
    let vstep = cfg.validation.step;
    let sweep = Sweep::new(vstep);
    let safety = cfg.validation.safety;
    let given = Provenance::origin("given", "constant from config");

    let base = match &cfg.base {
        BaseSpec::StrongAt { alpha, kappa, step } => match kappa {
            Some(k) => Ok(Certificate::StrongAt(StrongSubregAtCert {
                x_bar: cfg.center.clone(),
                y_bar: cfg.value.clone(),
                kappa: *k,
                alpha: *alpha,
                eta,
                provenance: given.clone(),
            })),
            None => cert(certify_strong_at(
                &map,
                &cfg.center,
                &cfg.value,
                *alpha,
                Sweep::new(step.unwrap_or(vstep)),
                eta,
            ))?
            .map(Certificate::StrongAt),
        },
        BaseSpec::StrongAround { a, b, r0, kappa, step } => match kappa {
            Some(k) => Ok(Certificate::StrongAround(StrongSubregAroundCert {
                x_bar: cfg.center.clone(),
                y_bar: cfg.value.clone(),
                kappa: *k,
                a: *a,
                b: *b,
                r0: r0.unwrap_or(r0_ladder(*a)[0]),
                eta,
                provenance: given.clone(),
            })),
            None => cert(certify_strong_around(
                &map,
                &cfg.center,
                &cfg.value,
                *a,
                *b,
                *r0,
                Sweep::new(step.unwrap_or(vstep)),
                eta,
            ))?
            .map(Certificate::StrongAround),
        },
    };
    let base = match base {
        Ok(c) => c,
        Err(e) => {
            eprintln!("base certificate: {e}");
            out.json("certificates.json", &json!({ "config": cfg, "base_error": e.to_string() }))?;
            return Ok(Outcome::Violated);
        }
    };
    let base_report = cert(validate(&base, Subject::SetValued(&map), sweep, safety))??;
    let mut all_hold = base_report.holds;
    let mut doc = serde_json::Map::new();
    doc.insert("config".into(), serde_json::to_value(cfg)?);
    doc.insert(
        "base".into(),
        serde_json::to_value(Checked {
            certificate: base.clone(),
            validation: base_report,
        })?,
    );

    let (result, target) = match &cfg.perturbation {
        None => (base.clone(), map.clone()),
        Some(spec) => {
            let (pert, subject_map, target) = perturbation(spec, cfg, &map, eta)?;
            let pert = match pert {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("perturbation certificate: {e}");
                    doc.insert("perturbation_error".into(), json!(e.to_string()));
                    out.json("certificates.json", &doc)?;
                    return Ok(Outcome::Violated);
                }
            };
            let subject = match &subject_map {
                Subject2::Set(m) => Subject::SetValued(m),
                Subject2::Single(g) => Subject::SingleValued(g),
            };
            let report = cert(validate(&pert, subject, sweep, safety))??;
            all_hold &= report.holds;
            doc.insert(
                "perturbation".into(),
                serde_json::to_value(Checked {
                    certificate: pert.clone(),
                    validation: report,
                })?,
            );
            let propagated = match (&base, &pert) {
                (Certificate::StrongAt(b), Certificate::Calmness(c)) => {
                    cert(propagate_calm_perturbation(b, c, eta))?.map(Certificate::StrongAt)
                }
                (Certificate::StrongAt(b), Certificate::IsolatedSelection(s)) => {
                    cert(propagate_setvalued_perturbation(b, s, eta))?.map(Certificate::StrongAt)
                }
                (Certificate::StrongAround(b), Certificate::Calmness(c)) => {
                    cert(propagate_around_perturbation(b, c, eta))?.map(Certificate::StrongAround)
                }
                (b, p) => {
                    return Err(usage(format!(
                        "no propagation rule for a {} base with a {} perturbation",
                        b.kind_name(),
                        p.kind_name()
                    )))
                }
            };
            (propagated.map_err(|e| anyhow!(e))?, target)
        }
    };
    let result = result.with_scaled_constant(cfg.kappa_scale);
    let report = cert(validate(&result, Subject::SetValued(&target), sweep, safety))??;
    if !report.holds {
        eprintln!(
            "certificate violated: empirical modulus {} exceeds {} × {} (witness {:?})",
            report.worst_ratio, report.bound, report.safety, report.witness
        );
    }
    all_hold &= report.holds;
    doc.insert(
        "result".into(),
        serde_json::to_value(Checked {
            certificate: result,
            validation: report,
        })?,
    );
    doc.insert("holds".into(), json!(all_hold));
    out.json("certificates.json", &doc)?;
    Ok(Outcome::from_holds(all_hold))
}

enum Subject2 {
    Set(SetValuedMap),
    Single(SingleValuedMap),
}

type Perturbation = (Result<Certificate, CertError>, Subject2, SetValuedMap);

fn perturbation(spec: &PerturbationSpec, cfg: &CertifyConfig, map: &SetValuedMap, eta: f64) -> Result<Perturbation> {
    let n = cfg.center.len();
    let vstep = cfg.validation.step;
    let given = Provenance::origin("given", "constant from config");
    let calm_cert = |g: &SingleValuedMap, radius: f64, mu: f64, lipschitz: bool| -> Result<CalmnessCert> {
        let g_at_center = g.apply(&cfg.center).map_err(|e| usage(e.to_string()))?;
        Ok(CalmnessCert {
            x_bar: cfg.center.clone(),
            mu,
            radius,
            beta0: g.space().norm(&g_at_center).map_err(|e| usage(e.to_string()))?,
            g_at_center,
            lipschitz,
            provenance: given.clone(),
        })
    };
    Ok(match spec {
        PerturbationSpec::Calm { g, radius, mu, step } => {
            let g = single_valued(g, n, cfg.norm)?;
            let c = match mu {
                Some(mu) => Ok(calm_cert(&g, *radius, *mu, false)?),
                None => cert(certify_calmness(&g, &cfg.center, *radius, step.unwrap_or(vstep), eta))?,
            };
            let target = sum(&g, map).map_err(|e| usage(e.to_string()))?;
            (c.map(Certificate::Calmness), Subject2::Single(g), target)
        }
        PerturbationSpec::Lipschitz { g, radius, mu, step } => {
            let g = single_valued(g, n, cfg.norm)?;
            let c = match mu {
                Some(mu) => Ok(calm_cert(&g, *radius, *mu, true)?),
                None => cert(certify_lipschitz(&g, &cfg.center, *radius, step.unwrap_or(vstep), eta))?,
            };
            let target = sum(&g, map).map_err(|e| usage(e.to_string()))?;
            (c.map(Certificate::Calmness), Subject2::Single(g), target)
        }
        PerturbationSpec::SetValued {
            map: body,
            anchor,
            beta,
            mu,
            step,
        } => {
            let gmap = set_valued(body, n, cfg.norm)?;
            let c = match mu {
                Some(mu) => Ok(IsolatedSelectionCert {
                    x_bar: cfg.center.clone(),
                    z_bar: anchor.clone(),
                    mu: *mu,
                    beta: *beta,
                    provenance: given,
                }),
                None => cert(certify_isolated_selection(
                    &gmap,
                    &cfg.center,
                    anchor,
                    *beta,
                    Sweep::new(step.unwrap_or(vstep)),
                    eta,
                ))?,
            };
            let target = SetValuedMap::set_sum(&gmap, map).map_err(|e| usage(e.to_string()))?;
            (c.map(Certificate::IsolatedSelection), Subject2::Set(gmap), target)
        }
    })
}

// ---------------------------------------------------------------------------
// uniformize

fn uniformize_error(e: UniformizeError) -> anyhow::Error {
    match e {
        UniformizeError::Invalid(_) | UniformizeError::Map(_) | UniformizeError::Moduli(_) => usage(e.to_string()),
        other => anyhow!(other),
    }
}

pub fn run_uniformize(cfg: &UniformizeConfig, eta: f64, out: &Output) -> Result<Outcome> {
    check_positive("kappa_scale", cfg.kappa_scale)?;
    let points = cfg.sample.points();
    let first = points.first().ok_or_else(|| usage("empty sample"))?;
    let f = ParametricSingleValuedMap::new(
        cfg.f.clone(),
        space(first.t.len(), cfg.norm)?,
        space(first.x.len(), cfg.norm)?,
    )
    .map_err(|e| usage(e.to_string()))?;
    let inner = set_valued(&cfg.inner, first.x.len(), cfg.norm)?;
    let family = Family::new(f, inner).map_err(uniformize_error)?;
    let sample = CompactSample::new(points, cfg.floor).map_err(uniformize_error)?;
    let mut opts = cfg.options.clone();
    opts.eta = eta;
    let mut check = opts.clone();
    check.step = cfg.validation_step.unwrap_or(opts.step);

    let mut doc = serde_json::Map::new();
    doc.insert("config".into(), serde_json::to_value(cfg)?);
    let mut holds = true;
    let failed = |doc: &mut serde_json::Map<String, serde_json::Value>, e: UniformizeError| -> Result<()> {
        match e {
            UniformizeError::Invalid(_) | UniformizeError::Map(_) | UniformizeError::Moduli(_) => {
                Err(usage(e.to_string()))
            }
            other => {
                eprintln!("uniformization failed: {other}");
                doc.insert("error".into(), json!(other.to_string()));
                Ok(())
            }
        }
    };
    if matches!(cfg.mode, UniformMode::Around | UniformMode::Both) {
        match uniformize(&family, &sample, &opts) {
            Ok(mut rep) => {
                rep.cert.kappa *= cfg.kappa_scale;
                let v = validate_uniform(&rep.cert, &family, &sample, &check).map_err(uniformize_error)?;
                write_records_csv(out.create("records.csv")?, &rep.records, &rep.cert.subcover)?;
                write_validation_csv(out.create("validation.csv")?, &v)?;
                report_violations("around", &v);
                holds &= v.holds;
                doc.insert("around".into(), json!({ "report": rep, "validation": v }));
            }
            Err(e) => {
                failed(&mut doc, e)?;
                holds = false;
            }
        }
    }
    if matches!(cfg.mode, UniformMode::At | UniformMode::Both) {
        match uniformize_at(&family, &sample, &opts) {
            Ok(mut rep) => {
                rep.cert.kappa *= cfg.kappa_scale;
                let v = validate_uniform_at(&rep.cert, &family, &sample, &check).map_err(uniformize_error)?;
                write_at_records_csv(out.create("records_at.csv")?, &rep.records, &rep.cert.subcover)?;
                write_validation_csv(out.create("validation_at.csv")?, &v)?;
                report_violations("at", &v);
                holds &= v.holds;
                doc.insert("at".into(), json!({ "report": rep, "validation": v }));
            }
            Err(e) => {
                failed(&mut doc, e)?;
                holds = false;
            }
        }
    }
    doc.insert("holds".into(), json!(holds));
    out.json("uniform.json", &doc)?;
    Ok(Outcome::from_holds(holds))
}

fn report_violations(mode: &str, v: &subreg_core::uniformize::UniformValidation) {
    for viol in &v.violations {
        eprintln!(
            "{mode}: sample {} has modulus {} > {} × {} (witness {:?})",
            viol.index, viol.estimate, v.bound, v.safety, viol.witness
        );
    }
}

// ---------------------------------------------------------------------------
// follow

pub fn run_follow(cfg: &FollowConfig, ov: &Overrides, out: &Output) -> Result<Outcome> {
    let n = cfg.x0.len();
    if n == 0 {
        return Err(usage("x0 must be nonempty"));
    }
    let f = ParametricSingleValuedMap::new(cfg.f.clone(), space(1, cfg.norm)?, space(n, cfg.norm)?)
        .map_err(|e| usage(e.to_string()))?;
    let inner = set_valued(&cfg.inner, n, cfg.norm)?;
    let ge = ParametricGE::new(f, inner, cfg.p.clone(), cfg.horizon, cfg.t_steps).map_err(|e| usage(e.to_string()))?;
    let mut fopts = cfg.follow.clone();
    if let Some(tol) = ov.tol {
        fopts.tol = tol;
    }
    let mut uopts = cfg.options.clone();
    if let Some(eta) = ov.eta {
        uopts.eta = eta;
    }
    let traj = match follow(&ge, &cfg.x0, &fopts) {
        Ok(t) => t,
        Err(e @ PathError::InfeasibleStart { .. })
        | Err(e @ PathError::Invalid(_))
        | Err(e @ PathError::OutOfDomain { .. })
        | Err(e @ PathError::Map(_))
        | Err(e @ PathError::Space(_)) => return Err(usage(e.to_string())),
        Err(e) => return Err(anyhow!(e)),
    };
    write_trajectory_csv(out.create("trajectory.csv")?, &traj)?;
    let mut doc = serde_json::Map::new();
    doc.insert("config".into(), serde_json::to_value(cfg)?);
    doc.insert("status".into(), serde_json::to_value(&traj.status)?);
    doc.insert("trust_radius".into(), json!(traj.trust_radius));
    let bad_residuals = recheck_residuals(&ge, &traj)?;
    doc.insert("residual_failures".into(), json!(bad_residuals));
    let mut holds = bad_residuals.is_empty();
    if let TrajectoryStatus::Stalled { index, t, reason } = &traj.status {
        eprintln!("trajectory stalled at node {index} (t = {t}): {reason}");
        holds = false;
    } else if cfg.certify {
        match certify_trajectory(&ge, &traj, cfg.floor, &uopts) {
            Ok(cert) => {
                let (around, at) = validate_trajectory_certificate(&ge, &traj, &cert, &uopts)?;
                let warm = warm_start_violations(&ge, &traj, cert.warm_start_bound())?;
                report_violations("around", &around);
                report_violations("at", &at);
                if !warm.is_empty() {
                    eprintln!("warm-start bound violated at steps {warm:?}");
                }
                holds &= around.holds && at.holds && warm.is_empty();
                write_records_csv(out.create("records.csv")?, &cert.around.records, &cert.around.cert.subcover)?;
                doc.insert(
                    "certificate".into(),
                    json!({
                        "around": cert.around.cert,
                        "at": cert.at.cert,
                        "warm_start_kappa": cert.warm_start_bound().kappa,
                    }),
                );
                doc.insert("validation".into(), json!({ "around": around, "at": at }));
                doc.insert("warm_start_violations".into(), json!(warm));
            }
            Err(e) => {
                eprintln!("certification failed: {e}");
                doc.insert("certificate_error".into(), json!(e.to_string()));
                holds = false;
            }
        }
    }
    doc.insert("holds".into(), json!(holds));
    out.json("follow.json", &doc)?;
    Ok(Outcome::from_holds(holds))
}

// ---------------------------------------------------------------------------
// counterexample

#[derive(Serialize)]
struct CounterexampleRow {
    radius: f64,
    step: f64,
    subreg_f: f64,
    calm_g: f64,
    strong_h: f64,
    growth: Option<f64>,
    f_ok: bool,
    g_ok: bool,
    h_ok: bool,
}

/// `f` subregular at 0 with modulus 1, `g` calm at 0 with modulus `δ` on
/// `B[0, δ]`, and the strong modulus of `h = f + g` growing tenfold per
/// decade of radius.
pub fn counterexample(cfg: &CounterexampleConfig, out: &Output) -> Result<Outcome> {
    let line = Space::line();
    let f = SetValuedMap::lift(Rule::PaperF, line)?;
    let g = SingleValuedMap::line(Rule::PaperG)?;
    let h = SetValuedMap::lift(Rule::PaperH, line)?;
    let h_profile = moduli::divergence_profile(&h, &[0.0], &[0.0], &cfg.radii, cfg.per_radius, Default::default())
        .map_err(|e| usage(e.to_string()))?;
    let mut rows = Vec::new();
    let mut ok = true;
    for (i, &r) in cfg.radii.iter().enumerate() {
        let step = r / cfg.per_radius as f64;
        let sf = moduli::empirical_subreg_at(&f, &[0.0], &[0.0], r, step)?.value;
        let cg = moduli::empirical_calmness(&g, &[0.0], r, step)?.value;
        let sh = h_profile[i].value;
        let growth = (i > 0).then(|| sh / h_profile[i - 1].value);
        let f_ok = (0.99..=1.01).contains(&sf);
        let g_ok = cg >= 0.99 * r && cg <= 1.01 * r;
        let h_ok = growth.is_none_or(|x| x >= 9.0);
        ok &= f_ok && g_ok && h_ok;
        rows.push(CounterexampleRow {
            radius: r,
            step,
            subreg_f: sf,
            calm_g: cg,
            strong_h: sh,
            growth,
            f_ok,
            g_ok,
            h_ok,
        });
    }
    write_profile_csv(out.create("divergence.csv")?, &h_profile)?;
    out.json(
        "counterexample.json",
        &json!({ "config": cfg, "rows": rows, "confirmed": ok }),
    )?;
    for r in &rows {
        eprintln!(
            "δ = {:e}: subreg(f) = {}, calm(g) = {}, strong(h) = {}{}",
            r.radius,
            r.subreg_f,
            r.calm_g,
            r.strong_h,
            r.growth.map_or(String::new(), |g| format!(", growth {g}"))
        );
    }
    Ok(Outcome::from_holds(ok))
}

pub fn resolve_out(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("SUBREG_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| Path::new("out").to_path_buf())
}
