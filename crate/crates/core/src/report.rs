//! CSV writers. Every float is written with 17 significant digits
//! (`{:.16e}`), so values survive a text round trip bit for bit.

use std::io::Write;

use crate::moduli::ModulusEstimate;
use crate::pathfollow::Trajectory;
use crate::uniformize::{LocalAtRecord, LocalUniformRecord, UniformValidation};

/// `{:.16e}`, with `inf`, `-inf` and `nan` for non-finite values.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

fn coords(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| if n == 1 { prefix.to_string() } else { format!("{prefix}{i}") })
}

/// One row per estimate: radius, grid step, value, growth over the previous row.
pub fn write_profile_csv<W: Write>(out: W, profile: &[ModulusEstimate]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["radius", "grid_step", "value", "growth", "sample_count"])?;
    for (i, e) in profile.iter().enumerate() {
        let growth = if i == 0 { f64::NAN } else { e.value / profile[i - 1].value };
        w.write_record([
            fmt_f64(e.radius),
            fmt_f64(e.grid_step),
            fmt_f64(e.value),
            fmt_f64(growth),
            e.sample_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t, x…, residual, step_norm`.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory) -> csv::Result<()> {
    let n = traj.nodes.first().map_or(1, |n| n.x.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(coords("x", n));
    header.extend(["residual".into(), "step_norm".into()]);
    w.write_record(&header)?;
    for node in &traj.nodes {
        let mut row = vec![fmt_f64(node.t)];
        row.extend(node.x.iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(node.residual));
        row.push(fmt_f64(node.step_norm));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn point_cells(t: &[f64], x: &[f64]) -> Vec<String> {
    t.iter().chain(x).map(|v| fmt_f64(*v)).collect()
}

fn point_header(t: usize, x: usize) -> Vec<String> {
    let mut h: Vec<String> = coords("t", t).collect();
    h.extend(coords("x", x));
    h
}

/// Per-point records of the around mode, with a `selected` flag.
pub fn write_records_csv<W: Write>(
    out: W,
    records: &[LocalUniformRecord],
    subcover: &[usize],
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let (td, xd) = records.first().map_or((1, 1), |r| (r.t.len(), r.x.len()));
    let mut header = vec!["index".to_string()];
    header.extend(point_header(td, xd));
    header.extend(
        [
            "kappa_base", "a_base", "b_base", "mu", "kappa", "alpha", "beta", "cover_radius", "equi_continuity",
            "oscillation", "selected",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.index.to_string()];
        row.extend(point_cells(&r.t, &r.x));
        row.extend(
            [
                r.kappa_base,
                r.a_base,
                r.b_base,
                r.mu,
                r.kappa,
                r.alpha,
                r.beta,
                r.cover_radius,
                r.equi_continuity,
                r.oscillation,
            ]
            .map(fmt_f64),
        );
        row.push(subcover.contains(&r.index).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-point records of the at mode, with a `selected` flag.
pub fn write_at_records_csv<W: Write>(out: W, records: &[LocalAtRecord], subcover: &[usize]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let (td, xd) = records.first().map_or((1, 1), |r| (r.t.len(), r.x.len()));
    let mut header = vec!["index".to_string()];
    header.extend(point_header(td, xd));
    header.extend(
        [
            "kappa_base", "alpha_base", "mu", "kappa", "alpha", "beta", "cover_radius", "equi_continuity",
            "oscillation", "selected",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.index.to_string()];
        row.extend(point_cells(&r.t, &r.x));
        row.extend(
            [
                r.kappa_base,
                r.alpha_base,
                r.mu,
                r.kappa,
                r.alpha,
                r.beta,
                r.cover_radius,
                r.equi_continuity,
                r.oscillation,
            ]
            .map(fmt_f64),
        );
        row.push(subcover.contains(&r.index).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per sample point: the brute-force estimate and whether it violates.
pub fn write_validation_csv<W: Write>(out: W, v: &UniformValidation) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "estimate", "bound", "violated"])?;
    for (i, e) in v.estimates.iter().enumerate() {
        let violated = v.violations.iter().any(|x| x.index == i);
        w.write_record([i.to_string(), fmt_f64(*e), fmt_f64(v.bound * v.safety), violated.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
