//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use serde_json::{json, Value};

use subreg_core::certificates::{
    around_radii, propagate_around_perturbation, propagate_calm_perturbation, CalmnessCert, CertError, Provenance,
    StrongSubregAroundCert, StrongSubregAtCert,
};
use subreg_core::maps::{sum, ParamRule, Rule};
use subreg_core::moduli::StrongAtOracle;
use subreg_core::pathfollow::{
    certify_trajectory, follow, validate_trajectory_certificate, warm_start_violations, FollowOptions,
};
use subreg_core::uniformize::{uniformize, uniformize_at, CompactSample, Family, UniformizeOptions};
use subreg_core::{
    Norm, Oracle, ParametricGE, ParametricSingleValuedMap, PathRule, SamplePoint, SetValuedMap, SingleValuedMap, Space,
};

const BIN: &str = env!("CARGO_BIN_EXE_subreg");

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn run(args: &[&str], config: Option<&Value>, out: &Path) -> i32 {
    let mut cmd = Command::new(BIN);
    cmd.args(args).arg("--out").arg(out);
    if let Some(cfg) = config {
        fs::create_dir_all(out).unwrap();
        let path = PathBuf::from(format!("{}.config.json", out.display()));
        fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
        cmd.arg("--config").arg(path);
    }
    let output = cmd.output().expect("spawning the cli");
    output.status.code().unwrap_or(-1)
}

fn cases(n: u32) -> Config {
    Config {
        cases: n,
        failure_persistence: None,
        ..Config::default()
    }
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn line() -> Space {
    Space::line()
}

fn cone01() -> SetValuedMap {
    SetValuedMap::normal_cone_box(vec![[0.0, 1.0]], Norm::Sup).unwrap()
}

// ---------------------------------------------------------------------------

fn counterexample(root: &Path, parallel: &str) -> (Outcome, Duration) {
    let out = root.join("counterexample");
    let start = Instant::now();
    let code = run(&["counterexample", "--parallel", parallel], None, &out);
    let elapsed = start.elapsed();
    if code != 0 {
        return (Outcome::new(false, format!("exit {code}")), elapsed);
    }
    let doc = read_json(out.join("counterexample.json"));
    let rows = doc["rows"].as_array().unwrap();
    let mut ok = doc["confirmed"] == json!(true) && rows.len() == 3;
    let mut detail = Vec::new();
    for r in rows {
        let d = r["radius"].as_f64().unwrap();
        let f = r["subreg_f"].as_f64().unwrap();
        let g = r["calm_g"].as_f64().unwrap();
        ok &= (0.99..=1.01).contains(&f) && g >= 0.99 * d && g <= 1.01 * d;
        if let Some(growth) = r["growth"].as_f64() {
            ok &= growth >= 9.0;
            detail.push(format!("{growth:.3}"));
        }
    }
    ok &= elapsed < Duration::from_secs(5);
    (
        Outcome::new(ok, format!("growth per decade [{}], {:.2?}", detail.join(", "), elapsed)),
        elapsed,
    )
}

fn formula_exactness() -> Outcome {
    let at = StrongSubregAtCert {
        x_bar: vec![0.0],
        y_bar: vec![0.0],
        kappa: 2.0,
        alpha: 1.0,
        eta: 0.05,
        provenance: Provenance::origin("given", ""),
    };
    let calm = |mu: f64, lipschitz: bool| CalmnessCert {
        x_bar: vec![0.0],
        mu,
        radius: 1.0,
        beta0: 0.0,
        g_at_center: vec![0.0],
        lipschitz,
        provenance: Provenance::origin("given", ""),
    };
    let kappa = propagate_calm_perturbation(&at, &calm(0.25, false), 0.05).map(|c| c.kappa);
    let mut ok = matches!(kappa, Ok(k) if (k - 4.2).abs() <= 1e-15);
    ok &= matches!(
        propagate_calm_perturbation(&at, &calm(0.5, false), 0.05),
        Err(CertError::ProductTooLarge { .. })
    );
    ok &= matches!(
        propagate_calm_perturbation(&at, &calm(0.7, false), 0.05),
        Err(CertError::ProductTooLarge { .. })
    );

    let mut around_ok = true;
    let mut checked = 0;
    let mut runner = TestRunner::new(cases(1000));
    let res = runner.run(
        &(1e-3f64..2.0, 1e-3f64..2.0, 0.0f64..3.0, 1e-3f64..2.0),
        |(a, b, mu, lr)| {
            match around_radii(a, b, mu, lr) {
                Ok((alpha, beta)) => {
                    prop_assert!(2.0 * alpha <= a && alpha <= lr && beta > 0.0);
                    prop_assert!(2.0 * beta + mu * alpha <= b);
                }
                Err(_) => prop_assert!(b - mu * (a / 2.0).min(lr) <= 0.0),
            }
            Ok(())
        },
    );
    around_ok &= res.is_ok();
    for (a, b, mu) in [(0.4, 0.4, 0.3), (1.0, 0.1, 0.05), (0.3, 0.7, 1.9)] {
        let base = StrongSubregAroundCert {
            x_bar: vec![0.0],
            y_bar: vec![0.0],
            kappa: 0.5,
            a,
            b,
            r0: a / 4.0,
            eta: 0.05,
            provenance: Provenance::origin("given", ""),
        };
        if let Ok(c) = propagate_around_perturbation(&base, &calm(mu, true), 0.05) {
            around_ok &= 2.0 * c.a <= a && 2.0 * c.b + mu * c.a <= b;
            checked += 1;
        } else {
            around_ok = false;
        }
    }
    let infeasible = StrongSubregAroundCert {
        x_bar: vec![0.0],
        y_bar: vec![0.0],
        kappa: 0.5,
        a: 1.0,
        b: 0.1,
        r0: 0.25,
        eta: 0.05,
        provenance: Provenance::origin("given", ""),
    };
    around_ok &= matches!(
        propagate_around_perturbation(&infeasible, &calm(1.5, true), 0.05),
        Err(CertError::Infeasible(_))
    );
    Outcome::new(
        ok && around_ok && checked == 3,
        format!("kappa' = {kappa:?}, around radii checked on 1000 random inputs"),
    )
}

fn criterion5_family() -> (Family, CompactSample) {
    let f = ParametricSingleValuedMap::new(
        ParamRule::Add {
            terms: vec![
                ParamRule::Static { g: Rule::Identity },
                ParamRule::Modulated {
                    g: Rule::Sin { amplitude: 0.1 },
                },
            ],
        },
        line(),
        line(),
    )
    .unwrap();
    let family = Family::new(f, cone01()).unwrap();
    let points = (0..11)
        .map(|i| SamplePoint {
            t: vec![if i == 10 { 1.0 } else { i as f64 / 10.0 }],
            x: vec![0.0],
        })
        .collect();
    (family, CompactSample::new(points, 1e-9).unwrap())
}

fn proof_constants() -> Outcome {
    let start = Instant::now();
    let (family, sample) = criterion5_family();
    let opts = UniformizeOptions::default();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-15 * a.abs().max(1.0);
    let mut ok = true;
    let mut n = 0;
    match uniformize(&family, &sample, &opts) {
        Ok(rep) => {
            for r in &rep.records {
                ok &= close(r.kappa, 3.0 * r.kappa_base);
                ok &= close(r.mu, 1.0 / (2.0 * r.kappa_base));
                ok &= close(r.beta, r.b_base / 4.0);
                ok &= r.cover_radius <= r.alpha / 2.0;
                n += 1;
            }
            let sel: Vec<_> = rep.cert.subcover.iter().map(|&i| &rep.records[i]).collect();
            ok &= !sel.is_empty();
            ok &= rep.cert.kappa == sel.iter().map(|r| r.kappa).fold(f64::NEG_INFINITY, f64::max);
            ok &= rep.cert.a == sel.iter().map(|r| r.alpha).fold(f64::INFINITY, f64::min);
            ok &= rep.cert.b == sel.iter().map(|r| r.beta).fold(f64::INFINITY, f64::min);
        }
        Err(_) => ok = false,
    }
    match uniformize_at(&family, &sample, &opts) {
        Ok(rep) => {
            for r in &rep.records {
                ok &= close(r.kappa, 3.0 * r.kappa_base);
                ok &= close(r.mu, 1.0 / (2.0 * r.kappa_base));
                ok &= r.cover_radius <= r.alpha / 2.0;
                n += 1;
            }
            let sel: Vec<_> = rep.cert.subcover.iter().map(|&i| &rep.records[i]).collect();
            ok &= !sel.is_empty();
            ok &= rep.cert.kappa == sel.iter().map(|r| r.kappa).fold(f64::NEG_INFINITY, f64::max);
            ok &= rep.cert.c == sel.iter().map(|r| r.alpha).fold(f64::INFINITY, f64::min);
        }
        Err(_) => ok = false,
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(1);
    Outcome::new(ok, format!("{n} records, {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------

fn identity() -> Value {
    json!({"type": "identity"})
}

fn cone_sum() -> Value {
    json!({"type": "sum", "g": identity(), "F": {"type": "normal_cone_box", "box": [[0.0, 1.0]]}})
}

fn catalog() -> Vec<(&'static str, Value)> {
    vec![
        ("identity", identity()),
        (
            "x_plus_half_sin",
            json!({"type": "add", "terms": [identity(), {"type": "sin", "amplitude": 0.5}]}),
        ),
        ("x_plus_cone", cone_sum()),
        ("twice_x", json!({"type": "scaled", "factor": 2.0, "F": identity()})),
        ("half_x_plus_cone", json!({"type": "scaled", "factor": 0.5, "F": cone_sum()})),
    ]
}

fn certify_config(map: &Value, base: Value, perturbation: Option<Value>, kappa_scale: f64) -> Value {
    let mut cfg = json!({
        "operation": "certify",
        "map": map,
        "center": [0.0],
        "value": [0.0],
        "base": base,
        "validation": {"step": 1e-4, "safety": 1.1},
        "kappa_scale": kappa_scale
    });
    if let Some(p) = perturbation {
        cfg["perturbation"] = p;
    }
    cfg
}

fn at_base() -> Value {
    json!({"kind": "strong_at", "alpha": 0.5})
}

fn around_base() -> Value {
    json!({"kind": "strong_around", "a": 0.4, "b": 0.4})
}

fn calm_ball(mu: f64) -> Value {
    json!({"kind": "set_valued",
           "map": {"type": "calm_ball", "center": [0.0], "offset": [0.0], "mu": mu},
           "anchor": [0.0], "beta": 0.25})
}

struct Sweep4 {
    sound: Vec<(String, Value)>,
    negative: Vec<(String, Value)>,
}

fn soundness_configs() -> Sweep4 {
    let mut sound = Vec::new();
    let mut negative = Vec::new();
    for (name, map) in catalog() {
        let calm = json!({"kind": "calm", "g": {"type": "scaling", "factor": 0.25}, "radius": 0.5});
        let lip = json!({"kind": "lipschitz", "g": {"type": "sin", "amplitude": 0.25}, "radius": 0.2});
        sound.push((format!("{name}-calm"), certify_config(&map, at_base(), Some(calm), 1.0)));
        sound.push((format!("{name}-setvalued"), certify_config(&map, at_base(), Some(calm_ball(0.25)), 1.0)));
        sound.push((format!("{name}-around"), certify_config(&map, around_base(), Some(lip), 1.0)));
        negative.push((format!("{name}-at-halved"), certify_config(&map, at_base(), None, 0.5)));
        negative.push((format!("{name}-around-halved"), certify_config(&map, around_base(), None, 0.5)));
    }
    let tight_calm = json!({"kind": "calm", "g": {"type": "sin", "amplitude": -0.5}, "radius": 0.5});
    let tight_lip = json!({"kind": "lipschitz", "g": {"type": "sin", "amplitude": -0.5}, "radius": 0.2});
    negative.push(("tight-calm-halved".into(), certify_config(&identity(), at_base(), Some(tight_calm), 0.5)));
    negative.push((
        "tight-setvalued-halved".into(),
        certify_config(&identity(), at_base(), Some(calm_ball(0.25)), 0.5),
    ));
    negative.push((
        "tight-around-halved".into(),
        certify_config(&identity(), around_base(), Some(tight_lip), 0.5),
    ));
    Sweep4 { sound, negative }
}

fn replayable(validation: &Value) -> bool {
    let worst = validation["worst_ratio"].as_f64();
    let replayed = validation["replayed"].as_f64();
    !validation["witness"].is_null()
        && matches!((worst, replayed), (Some(w), Some(r)) if (w - r).abs() <= 1e-12 * w.abs().max(1.0))
}

fn soundness(root: &Path, parallel: &str) -> (Outcome, Duration) {
    let root = root.join("certify");
    let configs = soundness_configs();
    let start = Instant::now();
    let mut failures = Vec::new();
    for (name, cfg) in &configs.sound {
        let out = root.join(name);
        let code = run(&["certify", "--parallel", parallel], Some(cfg), &out);
        let ok = code == 0 && {
            let doc = read_json(out.join("certificates.json"));
            doc["holds"] == json!(true) && doc["result"]["validation"]["holds"] == json!(true)
        };
        if !ok {
            failures.push(format!("{name} (exit {code})"));
        }
    }
    for (name, cfg) in &configs.negative {
        let out = root.join(name);
        let code = run(&["certify", "--parallel", parallel], Some(cfg), &out);
        let ok = code == 1 && {
            let v = &read_json(out.join("certificates.json"))["result"]["validation"];
            v["holds"] == json!(false) && replayable(v)
        };
        if !ok {
            failures.push(format!("{name} not flagged (exit {code})"));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(30);
    let detail = if failures.is_empty() {
        format!(
            "{} certificates hold, {} halved constants flagged with replayed witnesses, {elapsed:.2?}",
            configs.sound.len(),
            configs.negative.len()
        )
    } else {
        format!("failures: {}; {elapsed:.2?}", failures.join(", "))
    };
    (Outcome::new(pass, detail), elapsed)
}

// ---------------------------------------------------------------------------

fn uniform_config() -> Value {
    json!({
        "operation": "uniformize",
        "f": {"type": "add", "terms": [
            {"type": "static", "g": identity()},
            {"type": "modulated", "g": {"type": "sin", "amplitude": 0.1}}
        ]},
        "F": {"type": "normal_cone_box", "box": [[0.0, 1.0]]},
        "sample": {"type": "param_grid", "lo": 0.0, "hi": 1.0, "count": 11, "x": [0.0]},
        "mode": "around",
        "validation_step": 1e-4
    })
}

fn uniformization(root: &Path, parallel: &str) -> (Outcome, Duration) {
    let out = root.join("uniformize");
    let start = Instant::now();
    let code = run(&["uniformize", "--parallel", parallel], Some(&uniform_config()), &out);
    let elapsed = start.elapsed();
    if code != 0 {
        return (Outcome::new(false, format!("exit {code}")), elapsed);
    }
    let doc = read_json(out.join("uniform.json"));
    let v = &doc["around"]["validation"];
    let cert = &doc["around"]["report"]["cert"];
    let ok = v["holds"] == json!(true)
        && v["violations"].as_array().is_some_and(|a| a.is_empty())
        && v["checked"] == json!(11)
        && elapsed < Duration::from_secs(60);
    (
        Outcome::new(
            ok,
            format!(
                "kappa {} a {} b {} over {} points, worst {}, {elapsed:.2?}",
                cert["kappa"], cert["a"], cert["b"], v["checked"], v["worst"]
            ),
        ),
        elapsed,
    )
}

fn path_following() -> Outcome {
    let start = Instant::now();
    let f = ParametricSingleValuedMap::new(ParamRule::Static { g: Rule::Identity }, line(), line()).unwrap();
    let p = PathRule::Sine {
        amplitude: vec![1.5],
        frequency: 1.0,
        phase: 0.0,
    };
    let ge = ParametricGE::new(f, cone01(), p, 2.0 * std::f64::consts::PI, 200).unwrap();
    let opts = FollowOptions {
        tol: 1e-8,
        trust_radius: Some(0.5),
        ..FollowOptions::default()
    };
    let traj = match follow(&ge, &[0.0], &opts) {
        Ok(t) if t.is_complete() => t,
        other => return Outcome::new(false, format!("trajectory incomplete: {other:?}")),
    };
    let deviation = traj.max_deviation(&ge, |t| vec![(1.5 * t.sin()).clamp(0.0, 1.0)]);
    let uopts = UniformizeOptions::default();
    let cert = match certify_trajectory(&ge, &traj, 1e-9, &uopts) {
        Ok(c) => c,
        Err(e) => return Outcome::new(false, format!("certification failed: {e}")),
    };
    let (around, at) = validate_trajectory_certificate(&ge, &traj, &cert, &uopts).unwrap();
    let warm = warm_start_violations(&ge, &traj, cert.warm_start_bound()).unwrap();
    let elapsed = start.elapsed();
    let ok = deviation <= 1e-6
        && traj.nodes.len() == 200
        && around.holds
        && at.holds
        && warm.is_empty()
        && elapsed < Duration::from_secs(60);
    Outcome::new(
        ok,
        format!(
            "{} nodes, max deviation {deviation:.3e}, kappa' {}, {} warm-start violations, {elapsed:.2?}",
            traj.nodes.len(),
            cert.warm_start_bound().kappa,
            warm.len()
        ),
    )
}

// ---------------------------------------------------------------------------

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism(serial: &Path, parallel: &Path) -> Outcome {
    let a = files(serial);
    let b = files(parallel);
    let differing: Vec<_> = a
        .iter()
        .filter(|(k, v)| b.get(*k) != Some(*v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    let ok = !a.is_empty() && a.len() == b.len() && differing.is_empty();
    Outcome::new(
        ok,
        if differing.is_empty() {
            format!("{} files identical at --parallel 1 and 8", a.len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Instance {
    Scaling(f64),
    SinPerturbed(f64),
    Cubic,
    ConeSum,
}

impl Instance {
    fn map(&self) -> SetValuedMap {
        let rule = match self {
            Instance::Scaling(c) => Rule::Scaling { factor: *c },
            Instance::SinPerturbed(a) => Rule::Add {
                terms: vec![Rule::Identity, Rule::Sin { amplitude: *a }],
            },
            Instance::Cubic => Rule::Cubic,
            Instance::ConeSum => return sum(&SingleValuedMap::line(Rule::Identity).unwrap(), &cone01()).unwrap(),
        };
        SetValuedMap::lift(rule, line()).unwrap()
    }
}

fn instance() -> impl Strategy<Value = Instance> {
    prop_oneof![
        (0.1f64..3.0).prop_map(Instance::Scaling),
        (-0.9f64..0.9).prop_map(Instance::SinPerturbed),
        Just(Instance::Cubic),
        Just(Instance::ConeSum),
    ]
}

fn offsets() -> impl Strategy<Value = Rule> {
    prop_oneof![
        Just(Rule::Identity),
        (-2.0f64..2.0).prop_map(|a| Rule::Sin { amplitude: a }),
        (-3.0f64..3.0).prop_map(|v| Rule::Constant { value: vec![v] }),
        Just(Rule::Cubic),
    ]
}

fn invariant_case(
    inst: Instance,
    x0: f64,
    r: f64,
    m: usize,
    k: i32,
    g: Rule,
    y: f64,
) -> Result<(), TestCaseError> {
    let map = inst.map();
    let y0 = map.evaluate(&[x0]).unwrap().sample(1.0).unwrap()[0].clone();
    let coarse = StrongAtOracle::with_per_side(&map, &[x0], &y0, r, m).unwrap();
    let est = coarse.estimate().unwrap();
    if let Some(w) = &est.witness {
        let again = coarse.replay(w).unwrap();
        prop_assert!(
            again == est.value || (again - est.value).abs() <= 1e-12 * est.value.abs().max(1.0),
            "replay {again} vs {}",
            est.value
        );
    }
    let fine = StrongAtOracle::with_per_side(&map, &[x0], &y0, r, 2 * m).unwrap().estimate().unwrap();
    prop_assert!(fine.value >= est.value - 1e-12, "refined {} < {}", fine.value, est.value);

    let c = 2f64.powi(k);
    let scaled = map.scaled(c).unwrap();
    let cy: Vec<f64> = y0.iter().map(|v| v * c).collect();
    let s = StrongAtOracle::with_per_side(&scaled, &[x0], &cy, r, m).unwrap().estimate().unwrap();
    prop_assert_eq!(s.value, est.value / c);

    let gmap = SingleValuedMap::line(g).unwrap();
    let gf = sum(&gmap, &map).unwrap();
    let gx = gmap.apply(&[x0]).unwrap()[0];
    prop_assert_eq!(
        gf.dist_to_image(&[x0], &[y]).unwrap().to_bits(),
        map.dist_to_image(&[x0], &[y - gx]).unwrap().to_bits()
    );
    Ok(())
}

fn oracle_invariants() -> Outcome {
    let mut runner = TestRunner::new(cases(100));
    let strategy = (
        instance(),
        0.05f64..0.95,
        0.01f64..0.5,
        2usize..40,
        -3i32..4,
        offsets(),
        -3.0f64..3.0,
    );
    match runner.run(&strategy, |(inst, x0, r, m, k, g, y)| invariant_case(inst, x0, r, m, k, g, y)) {
        Ok(()) => Outcome::new(
            true,
            "replay, refinement, power-of-two scaling and translation on 100 random instances",
        ),
        Err(e) => Outcome::new(false, e.to_string()),
    }
}

// ---------------------------------------------------------------------------

fn main() {
    let serial = tempfile::tempdir().unwrap();
    let parallel = tempfile::tempdir().unwrap();
    let mut results = Vec::new();

    let (c1, _) = counterexample(serial.path(), "1");
    results.push(("1 counterexample divergence", c1));
    results.push(("2 formula exactness", formula_exactness()));
    results.push(("3 proof-constant identities", proof_constants()));
    let (c4, _) = soundness(serial.path(), "1");
    results.push(("4 certificate soundness sweep", c4));
    let (c5, _) = uniformization(serial.path(), "1");
    results.push(("5 uniformization", c5));
    results.push(("6 path following", path_following()));

    counterexample(parallel.path(), "8");
    soundness(parallel.path(), "8");
    uniformization(parallel.path(), "8");
    results.push(("7 determinism", determinism(serial.path(), parallel.path())));
    results.push(("8 oracle invariants", oracle_invariants()));

    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
