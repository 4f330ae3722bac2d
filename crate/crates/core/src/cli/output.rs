//! On-disk formats: the per-step CSV series and legacy structured-points snapshots.

use crate::diagnostics::DiagnosticsRecord;
use crate::grid::{ScalarField, VectorField};
use std::io::{self, Write};

/// Column order of `series.csv`.
pub const CSV_HEADER: [&str; 23] = [
    "step",
    "time",
    "energy",
    "l2_gradP",
    "lp_gradP",
    "linf_gradP",
    "w3p_gradP",
    "lambda_min",
    "lambda_argmin_i",
    "lambda_argmin_j",
    "lambda_argmin_k",
    "curl_residual",
    "bbox_min_x",
    "bbox_min_y",
    "bbox_min_z",
    "bbox_max_x",
    "bbox_max_y",
    "bbox_max_z",
    "u_max",
    "solver_iters",
    "solver_residual",
    "est_ratio_u",
    "est_ratio_Au",
];

/// Shortest round-trip decimal, switching to exponent form for very small or
/// large magnitudes.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt<T>(v: Option<T>, fmt: impl Fn(T) -> String) -> String {
    v.map(fmt).unwrap_or_default()
}

/// One CSV row; missing values are empty.
pub fn csv_row(r: &DiagnosticsRecord) -> Vec<String> {
    let (est_u, est_au) = r.estimate_ratios();
    let mut row = vec![r.step.to_string()];
    row.extend(
        [r.time, r.energy, r.l2_grad, r.lp_grad, r.linf_grad, r.w3p_grad, r.lambda_min]
            .into_iter()
            .map(num),
    );
    row.extend(r.lambda_argmin.iter().map(|v| v.to_string()));
    row.push(num(r.curl_residual));
    row.extend(r.support.min.into_iter().map(num));
    row.extend(r.support.max.into_iter().map(num));
    row.push(opt(r.solve.map(|s| s.u_max), num));
    row.push(opt(r.solve.map(|s| s.iterations), |n| n.to_string()));
    row.push(opt(r.solve.map(|s| s.residual), num));
    row.push(opt(est_u, num));
    row.push(opt(est_au, num));
    row
}

/// Legacy ASCII structured-points file with point data `P`, `gradP` and `u`.
/// Points sit at cell centres.
pub fn write_vtk(
    out: &mut impl Write,
    title: &str,
    p: &ScalarField,
    grad: &VectorField,
    u: &VectorField,
) -> io::Result<()> {
    let spec = p.spec();
    let d = spec.dims();
    let c0 = spec.center(0);
    let h = spec.spacing();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.replace('\n', " "))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_POINTS")?;
    writeln!(out, "DIMENSIONS {} {} {}", d[0], d[1], d[2])?;
    writeln!(out, "ORIGIN {} {} {}", num(c0[0]), num(c0[1]), num(c0[2]))?;
    writeln!(out, "SPACING {} {} {}", num(h[0]), num(h[1]), num(h[2]))?;
    writeln!(out, "POINT_DATA {}", spec.len())?;
    writeln!(out, "SCALARS P double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for &v in p.values() {
        writeln!(out, "{}", num(v))?;
    }
    for (name, field) in [("gradP", grad), ("u", u)] {
        writeln!(out, "VECTORS {name} double")?;
        for v in field.values() {
            writeln!(out, "{} {} {}", num(v[0]), num(v[1]), num(v[2]))?;
        }
    }
    Ok(())
}

/// Parses whitespace-separated samples; the count must equal `cells`.
pub fn parse_samples(text: &str, cells: usize) -> Result<Vec<f64>, String> {
    let values: Vec<f64> = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: '{t}'")))
        .collect::<Result<_, _>>()?;
    if values.len() != cells {
        return Err(format!("expected {cells} samples, found {}", values.len()));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn vtk_layout() {
        let g = GridSpec::unit_cube(4).unwrap();
        let p = ScalarField::from_fn(g, |x| x[0]);
        let v = VectorField::zeros(g);
        let mut buf = Vec::new();
        write_vtk(&mut buf, "t", &p, &v, &v).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[3], "DATASET STRUCTURED_POINTS");
        assert_eq!(lines[4], "DIMENSIONS 4 4 4");
        assert_eq!(lines[5], "ORIGIN 0.125 0.125 0.125");
        assert_eq!(lines[7], "POINT_DATA 64");
        assert_eq!(lines.len(), 10 + 64 + 2 * 65);
        assert_eq!(lines[10], "0.125");
        assert_eq!(lines[11], "0.375");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, -0.1, 1.0 / 3.0, 2.5e-11, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(num(2.5e-11), "2.5e-11");
    }

    #[test]
    fn samples() {
        assert_eq!(parse_samples("1 2\n3\t4", 4).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert!(parse_samples("1 2", 3).is_err());
        assert!(parse_samples("1 x", 2).is_err());
    }
}
