use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};
use splinet::io::{format_float, write_spline_csv, SplineManifest};
use splinet::{ElementLabel, KnotVector, Spline};

use crate::Failure;

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    write(path, text)
}

/// `m` equally spaced points covering the knot range, ends included.
pub fn sample_grid(knots: &KnotVector, m: usize) -> Vec<f64> {
    let (a, b) = (knots.first(), knots.last());
    match m {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..m)
            .map(|i| if i + 1 == m { b } else { a + (b - a) * i as f64 / (m - 1) as f64 })
            .collect(),
    }
}

pub fn label_json(label: &ElementLabel) -> Value {
    json!({ "level": label.level, "index": label.index, "member": label.member })
}

/// Writes sampled values and derivative matrices of each spline and returns
/// the manifest entries.
pub fn write_elements(
    out: &Path,
    splines: &[Spline],
    labels: Option<&[ElementLabel]>,
    ts: &[f64],
) -> Result<(Vec<Value>, Vec<Vec<f64>>), Failure> {
    let mut entries = Vec::with_capacity(splines.len());
    let mut series = Vec::with_capacity(splines.len());
    for (i, s) in splines.iter().enumerate() {
        let values = s.evaluate_many(ts)?;
        let mut csv = String::from("t,value\n");
        for (t, v) in ts.iter().zip(&values) {
            writeln!(csv, "{},{}", format_float(*t), format_float(*v)).unwrap();
        }
        let name = match labels {
            Some(l) => format!("l{}_i{}_m{}", l[i].level, l[i].index, l[i].member),
            None => format!("{i:04}"),
        };
        let sample_path = format!("samples/{name}.csv");
        let matrix_path = format!("matrices/{name}.csv");
        write(&out.join(&sample_path), csv)?;
        let mut m = Vec::new();
        write_spline_csv(&mut m, s)?;
        write(&out.join(&matrix_path), m)?;
        let sm = SplineManifest::of(s);
        let mut entry = json!({
            "index": i,
            "samples": sample_path,
            "matrix": matrix_path,
            "support_offset": sm.support_offset,
            "support_len": sm.support_len,
            "convention": sm.convention,
        });
        if let Some(l) = labels {
            entry["label"] = label_json(&l[i]);
        }
        entries.push(entry);
        series.push(values);
    }
    Ok((entries, series))
}

/// Minimal line plot: one polyline per series over shared `ts`, with axes.
pub fn svg_plot(ts: &[f64], series: &[Vec<f64>]) -> String {
    let (w, h, pad) = (800.0, 400.0, 30.0);
    let (t0, t1) = (ts.first().copied().unwrap_or(0.0), ts.last().copied().unwrap_or(1.0));
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for v in series.iter().flatten() {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if hi - lo < 1e-300 {
        hi = lo + 1.0;
    }
    let x = |t: f64| pad + (t - t0) / (t1 - t0).max(1e-300) * (w - 2.0 * pad);
    let y = |v: f64| h - pad - (v - lo) / (hi - lo) * (h - 2.0 * pad);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    writeln!(
        s,
        "<line x1=\"{pad}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        y(0.0),
        w - pad,
        y(0.0)
    )
    .unwrap();
    writeln!(
        s,
        "<line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{:.2}\" stroke=\"black\"/>",
        h - pad
    )
    .unwrap();
    for (i, vals) in series.iter().enumerate() {
        let hue = (i * 47) % 360;
        let points: Vec<String> = ts
            .iter()
            .zip(vals)
            .map(|(t, v)| format!("{:.2},{:.2}", x(*t), y(*v)))
            .collect();
        writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"hsl({hue},70%,40%)\" stroke-width=\"1\" points=\"{}\"/>",
            points.join(" ")
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
