//! Plain-text exchange formats: spline CSV with a JSON manifest, matrices
//! as dense or `i,j,value` CSV, and knot lists.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::band::BandMatrix;
use crate::error::{Result, SplineError};
use crate::knots::{BoundaryMode, KnotVector};
use crate::spline::{Convention, Spline, Support};

/// Seventeen significant digits, enough to round-trip an `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Everything besides the derivative matrix needed to rebuild a spline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineManifest {
    pub order: usize,
    pub mode: BoundaryMode,
    pub knots: Vec<f64>,
    pub support_offset: Option<usize>,
    pub support_len: Option<usize>,
    pub convention: Convention,
}

impl SplineManifest {
    pub fn of(s: &Spline) -> Self {
        Self {
            order: s.order(),
            mode: s.knots().mode(),
            knots: s.knots().values().to_vec(),
            support_offset: s.support().map(|x| x.offset),
            support_len: s.support().map(|x| x.len),
            convention: s.convention(),
        }
    }
}

/// Rows `knot_index,xi,d0,..,dk` over the support.
pub fn write_spline_csv<W: Write>(mut w: W, s: &Spline) -> std::io::Result<()> {
    let k = s.order();
    let mut header = vec!["knot_index".to_string(), "xi".to_string()];
    header.extend((0..=k).map(|j| format!("d{j}")));
    writeln!(w, "{}", header.join(","))?;
    if let Some(sup) = s.support() {
        for r in 0..sup.rows() {
            let g = sup.offset + r;
            let mut fields = vec![g.to_string(), format_float(s.knots().get(g))];
            fields.extend(s.row(r).iter().map(|&x| format_float(x)));
            writeln!(w, "{}", fields.join(","))?;
        }
    }
    Ok(())
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| SplineError::Parse(format!("line {line}: '{}' is not a number", field.trim())))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn is_header(line: &str) -> bool {
    line.split(',').any(|f| f.trim().parse::<f64>().is_err())
}

/// Reads back a spline written by [`write_spline_csv`].
pub fn read_spline(csv: &str, manifest: &SplineManifest) -> Result<Spline> {
    let knots = match manifest.mode {
        BoundaryMode::ZeroBoundary => KnotVector::new(manifest.knots.clone())?,
        BoundaryMode::Superfluous { extra } => {
            let n = manifest.knots.len();
            if n < 2 * extra + 2 {
                return Err(SplineError::Parse("too few knots for the boundary mode".into()));
            }
            KnotVector::superfluous(&manifest.knots[extra..n - extra], extra)?
        }
    };
    let knots = Arc::new(knots);
    let (Some(offset), Some(len)) = (manifest.support_offset, manifest.support_len) else {
        return Ok(Spline::zero(knots, manifest.order));
    };
    let mut matrix = Vec::new();
    for (line, l) in data_lines(csv).filter(|(_, l)| !is_header(l)) {
        let fields: Vec<&str> = l.split(',').collect();
        if fields.len() != manifest.order + 3 {
            return Err(SplineError::Parse(format!(
                "line {line}: expected {} fields, got {}",
                manifest.order + 3,
                fields.len()
            )));
        }
        for f in &fields[2..] {
            matrix.push(parse_f64(f, line)?);
        }
    }
    Spline::new(knots, manifest.order, Support { offset, len }, matrix, manifest.convention)
}

/// Knots listed one per line or comma separated; a non-numeric first line
/// is taken as a header.
pub fn read_knots(text: &str) -> Result<KnotVector> {
    let mut values = Vec::new();
    for (n, (line, l)) in data_lines(text).enumerate() {
        if n == 0 && is_header(l) {
            continue;
        }
        for f in l.split(',').filter(|f| !f.trim().is_empty()) {
            values.push(parse_f64(f, line)?);
        }
    }
    KnotVector::new(values)
}

/// A symmetric matrix from CSV: `i,j,value` triplets when that is the
/// header, dense rows otherwise.
pub fn read_matrix(text: &str) -> Result<BandMatrix> {
    let mut lines = data_lines(text).peekable();
    let triplets = matches!(lines.peek(), Some((_, l)) if l.replace(' ', "") == "i,j,value");
    if triplets {
        lines.next();
        let mut entries = Vec::new();
        let mut dim = 0;
        for (line, l) in lines {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 3 {
                return Err(SplineError::Parse(format!("line {line}: expected i,j,value")));
            }
            let idx = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| SplineError::Parse(format!("line {line}: bad index '{}'", s.trim())))
            };
            let (i, j) = (idx(f[0])?, idx(f[1])?);
            dim = dim.max(i + 1).max(j + 1);
            entries.push((i, j, parse_f64(f[2], line)?));
        }
        return BandMatrix::from_triplets(dim, &entries);
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, (line, l)) in lines.enumerate() {
        if n == 0 && is_header(l) {
            continue;
        }
        rows.push(l.split(',').map(|f| parse_f64(f, line)).collect::<Result<_>>()?);
    }
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(SplineError::Dimension(format!("dense matrix with {d} rows is not square")));
    }
    let a = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
    BandMatrix::from_dense(&a, 1e-10)
}

/// Non-zero entries as `i,j,value` rows.
pub fn write_matrix_triplets<W: Write>(mut w: W, a: &DMatrix<f64>) -> std::io::Result<()> {
    writeln!(w, "i,j,value")?;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if a[(i, j)] != 0.0 {
                writeln!(w, "{i},{j},{}", format_float(a[(i, j)]))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::build_basis;

    #[test]
    fn spline_round_trip() {
        let knots = Arc::new(KnotVector::random(9, 1e-3, 7).unwrap());
        let s = build_basis(knots, 3).unwrap().get(2).clone();
        let mut buf = Vec::new();
        write_spline_csv(&mut buf, &s).unwrap();
        let manifest: SplineManifest =
            serde_json::from_str(&serde_json::to_string(&SplineManifest::of(&s)).unwrap()).unwrap();
        let back = read_spline(std::str::from_utf8(&buf).unwrap(), &manifest).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn matrix_formats_agree() {
        let dense = "a,b,c\n2,1,0\n1,2,1\n0,1,2\n";
        let trip = "i,j,value\n0,0,2\n1,1,2\n2,2,2\n0,1,1\n1,2,1\n";
        assert_eq!(read_matrix(dense).unwrap(), read_matrix(trip).unwrap());
    }

    #[test]
    fn knots_report_offending_index() {
        let err = read_knots("xi\n0\n0.5\n0.4\n1\n").unwrap_err();
        assert!(matches!(err, SplineError::InvalidKnots { index: 2, .. }));
    }
}
