use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde_json::json;
use splinet::analysis::{
    count_inner_products, measure_partial_error, relative_support, BasisSupport, ErrorModel,
};
use splinet::io::{format_float, read_knots, read_matrix, write_matrix_triplets};
use splinet::ortho::{one_sided_osplines, two_sided_osplines};
use splinet::splinet::{
    band_diagonalize, dyadic_orthogonalize, partial_splinet, splinet_of_basis, submerge,
};
use splinet::{build_basis, BSplineBasis, Direction, DyadicLayout, KnotVector, Method, Splinet};

use crate::output::{label_json, sample_grid, svg_plot, write, write_elements, write_json};
use crate::{Failure, MethodArg, SplineArgs, Table};

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn load_knots(a: &SplineArgs) -> Result<Arc<KnotVector>, Failure> {
    let knots = match (&a.source.count, &a.source.file) {
        (Some(count), _) if a.equispaced => KnotVector::equispaced(*count, 0.0, 1.0)?,
        (Some(count), _) => {
            let gap = (0.5 / (*count).max(2) as f64).min(1e-3);
            KnotVector::random(*count, gap, a.seed)?
        }
        (None, Some(path)) => read_knots(&read_text(path)?)?,
        (None, None) => return Err(Failure::input("no knot source given")),
    };
    Ok(Arc::new(knots))
}

fn knots_json(basis: &BSplineBasis) -> serde_json::Value {
    json!(basis.knots().values())
}

pub fn basis(a: &SplineArgs) -> Result<(), Failure> {
    let basis = build_basis(load_knots(a)?, a.order)?;
    let ts = sample_grid(basis.knots(), a.samples);
    let (elements, series) = write_elements(&a.out, basis.splines(), None, &ts)?;
    if a.svg {
        write(&a.out.join("basis.svg"), svg_plot(&ts, &series))?;
    }
    write_json(
        &a.out.join("manifest.json"),
        &json!({
            "command": "basis",
            "order": a.order,
            "count": basis.len(),
            "knots": knots_json(&basis),
            "samples": a.samples,
            "elements": elements,
        }),
    )
}

fn splinet_for(
    basis: &BSplineBasis,
    stop_level: Option<usize>,
    tolerance: Option<f64>,
) -> Result<Splinet, Failure> {
    if stop_level.is_none() && tolerance.is_none() {
        return Ok(match DyadicLayout::new(basis.len(), basis.order()) {
            Ok(_) => dyadic_orthogonalize(basis)?,
            Err(_) => splinet_of_basis(basis)?,
        });
    }
    let layout = DyadicLayout::new(basis.len(), basis.order()).map_err(|_| {
        Failure::input(format!(
            "stopping early needs a dyadic basis of k (2^N - 1) elements, got {}",
            basis.len()
        ))
    })?;
    let level = match (stop_level, tolerance) {
        (Some(l), _) => l,
        (None, Some(t)) if t >= 0.0 => ErrorModel::recommend_stop_level(layout.levels, t),
        _ => return Err(Failure::input("tolerance must be non-negative")),
    };
    Ok(partial_splinet(basis, level)?)
}

pub fn orthogonalize(
    a: &SplineArgs,
    method: MethodArg,
    stop_level: Option<usize>,
    tolerance: Option<f64>,
) -> Result<(), Failure> {
    if method != MethodArg::Splinet && (stop_level.is_some() || tolerance.is_some()) {
        return Err(Failure::input("--stop-level and --tolerance apply only to --method splinet"));
    }
    let basis = build_basis(load_knots(a)?, a.order)?;
    let gram = basis.gram()?;
    let (transform, net) = match method {
        MethodArg::GsLr => (one_sided_osplines(&basis, Direction::LeftToRight)?, None),
        MethodArg::GsRl => (one_sided_osplines(&basis, Direction::RightToLeft)?, None),
        MethodArg::Twosided => (two_sided_osplines(&basis)?, None),
        MethodArg::Splinet => {
            let net = splinet_for(&basis, stop_level, tolerance)?;
            (net.transform.clone(), Some(net))
        }
    };
    let residual = transform.orthonormality_residual(&gram);
    let splines = match &net {
        Some(n) => n.splines.clone(),
        None => transform.splines(&basis)?,
    };
    let ts = sample_grid(basis.knots(), a.samples);
    let labels = net.as_ref().map(|n| n.labels.as_slice());
    let (elements, series) = write_elements(&a.out, &splines, labels, &ts)?;
    let mut csv = Vec::new();
    write_matrix_triplets(&mut csv, &transform.coeffs)?;
    write(&a.out.join("transform.csv"), csv)?;
    write_json(&a.out.join("gram.json"), &json!({ "max_abs_residual": residual }))?;
    if a.svg {
        write(&a.out.join("orthogonalized.svg"), svg_plot(&ts, &series))?;
    }
    let stop = net.as_ref().and_then(|n| n.stop_level);
    write_json(
        &a.out.join("manifest.json"),
        &json!({
            "command": "orthogonalize",
            "method": transform.method.tag(),
            "order": a.order,
            "count": basis.len(),
            "knots": knots_json(&basis),
            "partial": stop.is_some(),
            "stop_level": stop,
            "levels": net.as_ref().map(|n| n.layout.levels),
            "samples": a.samples,
            "max_abs_residual": residual,
            "elements": elements,
        }),
    )
}

pub fn diagonalize(matrix: &Path, k: usize, out: &Path) -> Result<(), Failure> {
    if k == 0 {
        return Err(Failure::input("--bandwidth-k must be at least 1"));
    }
    let h = read_matrix(&read_text(matrix)?)?;
    let m = h.dim();
    let sub = submerge(&h, k)?;
    let full = band_diagonalize(&sub.matrix, k)?;
    let p = full.coeffs.view((sub.pad_top, sub.pad_top), (m, m)).clone_owned();
    let residual = h.orthonormality_residual(&p);
    let mut decay = vec![0.0f64; m];
    let mut nnz = 0;
    for j in 0..m {
        for i in 0..m {
            let v = p[(i, j)].abs();
            if v != 0.0 {
                nnz += 1;
                decay[i.abs_diff(j)] = decay[i.abs_diff(j)].max(v);
            }
        }
    }
    let mut csv = Vec::new();
    write_matrix_triplets(&mut csv, &p)?;
    write(&out.join("P.csv"), csv)?;
    write_json(
        &out.join("report.json"),
        &json!({
            "m": m,
            "d": sub.matrix.dim(),
            "k": k,
            "N": sub.layout.levels,
            "n_U": sub.pad_top,
            "n_D": sub.pad_bottom,
            "gram_residual_max": residual,
            "nnz": nnz,
            "decay_profile": decay,
        }),
    )
}

fn read_samples(text: &str) -> Result<Vec<(f64, f64)>, Failure> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => rows.push((v[0], v[1])),
            _ if n == 0 => continue,
            _ => return Err(Failure::input(format!("data line {}: expected t,value", n + 1))),
        }
    }
    if rows.is_empty() {
        return Err(Failure::input("data file has no samples"));
    }
    Ok(rows)
}

pub fn project(a: &SplineArgs, data: &Path) -> Result<(), Failure> {
    let basis = build_basis(load_knots(a)?, a.order)?;
    let samples = read_samples(&read_text(data)?)?;
    let (lo, hi) = (basis.knots().first(), basis.knots().last());
    if let Some((t, _)) = samples.iter().find(|(t, _)| !(*t >= lo && *t <= hi)) {
        return Err(Failure::input(format!("sample at t = {t} lies outside [{lo}, {hi}]")));
    }
    let d = basis.len();
    let mut x = DMatrix::zeros(samples.len(), d);
    for (r, (t, _)) in samples.iter().enumerate() {
        for (c, v) in basis.evaluate_all(*t)?.into_iter().enumerate() {
            x[(r, c)] = v;
        }
    }
    let y = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    // least squares fit in the B-spline basis
    let fit = x
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Failure::input(format!("least squares failed: {e}")))?;
    let net = splinet_of_basis(&basis)?;
    let gram = basis.gram()?.to_dense();
    let p = &net.transform.coeffs;
    let coeffs = p.transpose() * (&gram * &fit);
    let recon = &x * (p * &coeffs);

    let mut csv = String::from("index,level,position,member,coefficient\n");
    for (i, c) in coeffs.iter().enumerate() {
        let l = net.labels[i];
        writeln!(csv, "{i},{},{},{},{}", l.level, l.index, l.member, format_float(*c)).unwrap();
    }
    write(&a.out.join("coefficients.csv"), csv)?;
    let mut csv = String::from("t,value,reconstruction\n");
    for ((t, v), r) in samples.iter().zip(recon.iter()) {
        writeln!(csv, "{},{},{}", format_float(*t), format_float(*v), format_float(*r)).unwrap();
    }
    write(&a.out.join("reconstruction.csv"), csv)?;
    let norm = y.norm();
    let err = if norm > 0.0 { (&y - &recon).norm() / norm } else { (&y - &recon).norm() };
    write_json(
        &a.out.join("report.json"),
        &json!({
            "count": d,
            "samples": samples.len(),
            "relative_l2_error": err,
            "labels": net.labels.iter().map(label_json).collect::<Vec<_>>(),
        }),
    )
}

fn dyadic_basis(order: usize, levels: usize) -> Result<BSplineBasis, Failure> {
    if order == 0 || levels == 0 || levels > 20 {
        return Err(Failure::input("need --order >= 1 and 1 <= --levels <= 20"));
    }
    let n = order * (1 << levels) - 1;
    Ok(build_basis(Arc::new(KnotVector::equispaced(n + 2, 0.0, 1.0)?), order)?)
}

pub fn report(table: Table, order: usize, levels: usize, out: &Path) -> Result<(), Failure> {
    let basis = dyadic_basis(order, levels)?;
    let n = basis.knots().internal_count();
    let (name, csv) = match table {
        Table::Supports => {
            let mut csv = String::from("basis,relative_support\n");
            let mut row = |name: &str, v: f64| writeln!(csv, "{name},{}", format_float(v)).unwrap();
            row("bsplines", relative_support(BasisSupport::Raw(&basis)).total);
            for (name, p) in [
                ("gs-lr", one_sided_osplines(&basis, Direction::LeftToRight)?),
                ("gs-rl", one_sided_osplines(&basis, Direction::RightToLeft)?),
                ("twosided", two_sided_osplines(&basis)?),
                ("splinet", dyadic_orthogonalize(&basis)?.transform),
            ] {
                row(name, relative_support(BasisSupport::Transformed(&p, &basis)).total);
            }
            for l in 0..levels.saturating_sub(1) {
                let p = partial_splinet(&basis, l)?.transform;
                row(
                    &format!("partial-splinet-l{l}"),
                    relative_support(BasisSupport::Transformed(&p, &basis)).total,
                );
            }
            ("supports", csv)
        }
        Table::Counts => {
            let mut csv = String::from("method,predicted,exact,instrumented\n");
            for m in [Method::GramSchmidtLeftRight, Method::Splinet] {
                let c = count_inner_products(m, n, order)?;
                writeln!(csv, "{},{},{},{}", m.tag(), c.predicted, c.exact, c.instrumented).unwrap();
            }
            ("counts", csv)
        }
        Table::Errors => {
            // row j: j iterations of the recursion after the initial step
            let mut csv = String::from("iterations");
            for m in 1..=order {
                write!(csv, ",e{m}").unwrap();
            }
            csv.push('\n');
            for j in 1..=levels {
                let errs = measure_partial_error(&basis, j + 1)?;
                write!(csv, "{j}").unwrap();
                for e in errs.iter().filter(|e| e.label.level == levels - 1) {
                    write!(csv, ",{}", format_float(e.squared)).unwrap();
                }
                csv.push('\n');
            }
            ("errors", csv)
        }
        Table::Bounds => {
            let stated = ErrorModel::new(levels);
            let consistent = ErrorModel::consistent(levels);
            let mut csv =
                String::from("level,h,h_consistent,error_bound,closed_bound,total_error_bound\n");
            for l in 0..levels {
                writeln!(
                    csv,
                    "{l},{},{},{},{},{}",
                    format_float(stated.h(l)),
                    format_float(consistent.h(l)),
                    format_float(stated.error_bound(l)),
                    format_float(stated.closed_bound(l)),
                    format_float(ErrorModel::total_error_bound(levels, l, 1.0)),
                )
                .unwrap();
            }
            ("bounds", csv)
        }
    };
    print!("{csv}");
    write(&out.join(format!("{name}.csv")), csv)
}
