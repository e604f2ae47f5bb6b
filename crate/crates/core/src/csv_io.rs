//! CSV export and import of vector and scalar fields.
//!
//! Vector files carry the header `x,y,u,v,status`, scalar files
//! `x,y,value`. Rows are in row-major node order, `x`/`y` are node centers in
//! pixels, and reals are printed with 9 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{PivError, Result};
use crate::field::{make_grid, GridSpec, NodeStatus, Quantity, ScalarField, VectorField};
use crate::image_io::write_bytes;

pub const VECTOR_HEADER: &str = "x,y,u,v,status";
pub const SCALAR_HEADER: &str = "x,y,value";

/// Formats a real with 9 significant digits, like C's `%.9g`.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{v:.decimals$}");
        if fixed.contains('.') {
            fixed
                .trim_end_matches('0')
                .trim_end_matches('.')
                .to_string()
        } else {
            fixed
        }
    } else {
        let m = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

pub fn vectors_to_csv(field: &VectorField) -> Result<String> {
    if !field.is_complete() {
        return Err(PivError::Numeric(format!(
            "cannot export a field with {} flagged node(s)",
            field.count(NodeStatus::Outlier)
        )));
    }
    let mut out = String::with_capacity(48 * (field.len() + 1));
    out.push_str(VECTOR_HEADER);
    out.push('\n');
    for (i, (x, y)) in field.grid.centers().into_iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            format_sig9(x),
            format_sig9(y),
            format_sig9(field.u[i]),
            format_sig9(field.v[i]),
            field.status[i].as_str()
        )
        .expect("writing to a String");
    }
    Ok(out)
}

pub fn export_vectors(field: &VectorField, path: impl AsRef<Path>) -> Result<()> {
    let text = vectors_to_csv(field)?;
    write_bytes(path.as_ref(), text.as_bytes())
}

pub fn scalars_to_csv(s: &ScalarField) -> String {
    let mut out = String::with_capacity(32 * (s.values.len() + 1));
    out.push_str(SCALAR_HEADER);
    out.push('\n');
    for (i, (x, y)) in s.grid.centers().into_iter().enumerate() {
        writeln!(
            out,
            "{},{},{}",
            format_sig9(x),
            format_sig9(y),
            format_sig9(s.values[i])
        )
        .expect("writing to a String");
    }
    out
}

pub fn export_scalars(s: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), scalars_to_csv(s).as_bytes())
}

fn parse_real(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| PivError::Format(format!("line {line}: bad number {s:?}")))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| PivError::io(path, e))
}

/// Rebuilds the grid from node centers. The first center is `window / 2`
/// from the origin, and consecutive centers are `step` apart. The frame
/// extent is taken as the smallest one holding every window.
fn infer_grid(xs: &[f64], ys: &[f64]) -> Result<GridSpec> {
    let bad = |msg: &str| PivError::Format(format!("node layout: {msg}"));
    let n = xs.len();
    let nx = ys.iter().take_while(|&&y| y == ys[0]).count();
    if n % nx != 0 {
        return Err(bad("rows have unequal length"));
    }
    let ny = n / nx;
    let window2 = xs[0];
    if window2 != ys[0] || window2 <= 0.0 || (2.0 * window2).fract() != 0.0 {
        return Err(bad("first center is not at (window/2, window/2)"));
    }
    let window = (2.0 * window2).round() as usize;
    let step = if nx > 1 {
        xs[1] - xs[0]
    } else if ny > 1 {
        ys[nx] - ys[0]
    } else {
        window as f64
    };
    if step <= 0.0 || step.fract() != 0.0 {
        return Err(bad("node spacing is not a positive integer"));
    }
    let step = step as usize;
    let width = (nx - 1) * step + window;
    let height = (ny - 1) * step + window;
    let grid = make_grid(width, height, window, step)?;
    for (i, (cx, cy)) in grid.centers().into_iter().enumerate() {
        if cx != xs[i] || cy != ys[i] {
            return Err(bad(&format!("node {i} is not on a regular lattice")));
        }
    }
    Ok(grid)
}

fn data_lines(text: &str, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => return Err(PivError::Format(format!("expected header {header:?}"))),
    }
    let rows: Vec<_> = lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(str::to_string).collect()))
        .collect();
    if rows.is_empty() {
        return Err(PivError::Format("no data rows".into()));
    }
    Ok(rows)
}

pub fn vectors_from_csv(text: &str) -> Result<VectorField> {
    let rows = data_lines(text, VECTOR_HEADER)?;
    let (mut xs, mut ys, mut u, mut v, mut status) = (vec![], vec![], vec![], vec![], vec![]);
    for (line, cols) in rows {
        if cols.len() != 5 {
            return Err(PivError::Format(format!("line {line}: expected 5 columns")));
        }
        xs.push(parse_real(&cols[0], line)?);
        ys.push(parse_real(&cols[1], line)?);
        u.push(parse_real(&cols[2], line)?);
        v.push(parse_real(&cols[3], line)?);
        status.push(
            NodeStatus::parse(cols[4].trim()).ok_or_else(|| {
                PivError::Format(format!("line {line}: bad status {:?}", cols[4]))
            })?,
        );
    }
    let grid = infer_grid(&xs, &ys)?;
    VectorField::new(grid, u, v, status)
}

pub fn import_vectors(path: impl AsRef<Path>) -> Result<VectorField> {
    vectors_from_csv(&read_text(path.as_ref())?)
}

pub fn scalars_from_csv(text: &str, quantity: Quantity) -> Result<ScalarField> {
    let rows = data_lines(text, SCALAR_HEADER)?;
    let (mut xs, mut ys, mut vals) = (vec![], vec![], vec![]);
    for (line, cols) in rows {
        if cols.len() != 3 {
            return Err(PivError::Format(format!("line {line}: expected 3 columns")));
        }
        xs.push(parse_real(&cols[0], line)?);
        ys.push(parse_real(&cols[1], line)?);
        vals.push(parse_real(&cols[2], line)?);
    }
    let grid = infer_grid(&xs, &ys)?;
    ScalarField::new(grid, vals, quantity)
}

pub fn import_scalars(path: impl AsRef<Path>, quantity: Quantity) -> Result<ScalarField> {
    scalars_from_csv(&read_text(path.as_ref())?, quantity)
}
