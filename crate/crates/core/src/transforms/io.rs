//! Plain-text CSV for fields: a `kind` row, one row per grid axis, then
//! labelled value rows. Values use 17 significant digits, which round-trips
//! every `f64` exactly.

use std::fmt::Write as _;

use super::fields::{PolarField, StripField};
use crate::error::{Error, Result};

fn push_row(out: &mut String, label: &str, values: &[f64]) {
    out.push_str(label);
    for v in values {
        let _ = write!(out, ",{v:.16e}");
    }
    out.push('\n');
}

pub fn write_polar_csv(v: &PolarField) -> String {
    let mut s = String::from("kind,polar\n");
    push_row(&mut s, "r", v.r_nodes());
    push_row(&mut s, "theta", v.theta_nodes());
    let nt = v.theta_nodes().len();
    for row in v.values().chunks(nt) {
        push_row(&mut s, "v", row);
    }
    s
}

pub fn write_strip_csv(v: &StripField) -> String {
    let mut s = String::from("kind,strip\n");
    push_row(&mut s, "t", v.t_nodes());
    push_row(&mut s, "theta", v.theta_nodes());
    let nt = v.theta_nodes().len();
    for row in v.v1().chunks(nt) {
        push_row(&mut s, "V1", row);
    }
    for row in v.v2().chunks(nt) {
        push_row(&mut s, "V2", row);
    }
    s
}

struct Rows<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Rows<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate().peekable(),
        }
    }

    fn next_row(&mut self) -> Option<(usize, &'a str, Vec<&'a str>)> {
        for (n, line) in self.lines.by_ref() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let label = parts.next().unwrap_or("");
            return Some((n + 1, label, parts.collect()));
        }
        None
    }

    fn expect(&mut self, label: &str) -> Result<Vec<f64>> {
        match self.next_row() {
            Some((n, l, cells)) if l == label => parse_cells(n, &cells),
            Some((n, l, _)) => Err(Error::Parse(format!(
                "line {n}: expected '{label}' row, found '{l}'"
            ))),
            None => Err(Error::Parse(format!("missing '{label}' row"))),
        }
    }
}

fn parse_cells(line: usize, cells: &[&str]) -> Result<Vec<f64>> {
    cells
        .iter()
        .map(|c| {
            c.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {line}: '{c}' is not a number")))
        })
        .collect()
}

fn expect_kind(rows: &mut Rows, kind: &str) -> Result<()> {
    match rows.next_row() {
        Some((_, "kind", cells)) if cells.first() == Some(&kind) => Ok(()),
        Some((n, _, _)) => Err(Error::Parse(format!(
            "line {n}: expected 'kind,{kind}' header"
        ))),
        None => Err(Error::Parse("empty field file".into())),
    }
}

fn value_rows(rows: &mut Rows, label: &str, count: usize, width: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count * width);
    for _ in 0..count {
        let row = rows.expect(label)?;
        if row.len() != width {
            return Err(Error::GridMismatch(format!(
                "'{label}' row has {} values, expected {width}",
                row.len()
            )));
        }
        out.extend(row);
    }
    Ok(out)
}

pub fn read_polar_csv(text: &str) -> Result<PolarField> {
    let mut rows = Rows::new(text);
    expect_kind(&mut rows, "polar")?;
    let r = rows.expect("r")?;
    let th = rows.expect("theta")?;
    let values = value_rows(&mut rows, "v", r.len(), th.len())?;
    if let Some((n, l, _)) = rows.next_row() {
        return Err(Error::Parse(format!(
            "line {n}: unexpected trailing row '{l}'"
        )));
    }
    PolarField::new(r, th, values)
}

pub fn read_strip_csv(text: &str) -> Result<StripField> {
    let mut rows = Rows::new(text);
    expect_kind(&mut rows, "strip")?;
    let t = rows.expect("t")?;
    let th = rows.expect("theta")?;
    let v1 = value_rows(&mut rows, "V1", t.len(), th.len())?;
    let v2 = value_rows(&mut rows, "V2", t.len(), th.len())?;
    if let Some((n, l, _)) = rows.next_row() {
        return Err(Error::Parse(format!(
            "line {n}: unexpected trailing row '{l}'"
        )));
    }
    StripField::new(t, th, v1, v2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn polar_roundtrip_is_bit_exact(vals in proptest::collection::vec(-1e300f64..1e300, 12)) {
            let v = PolarField::new(vec![0.1, 0.2, 0.7], vec![0.0, 0.3, 0.6, 0.9], vals).unwrap();
            let back = read_polar_csv(&write_polar_csv(&v)).unwrap();
            prop_assert_eq!(back, v);
        }

        #[test]
        fn strip_roundtrip_is_bit_exact(a in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 6),
                                        b in proptest::collection::vec(-1.0f64..1.0, 6)) {
            let v = StripField::new(vec![0.0, 1.0 / 3.0], vec![0.0, 0.1, std::f64::consts::PI], a, b).unwrap();
            let back = read_strip_csv(&write_strip_csv(&v)).unwrap();
            prop_assert_eq!(back, v);
        }
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(read_polar_csv("").is_err());
        assert!(read_polar_csv("kind,strip\n").is_err());
        assert!(read_polar_csv("kind,polar\nr,0.1,0.2\ntheta,0,1\nv,1,2\n").is_err());
        assert!(read_polar_csv("kind,polar\nr,0.1\ntheta,0,1\nv,1,x\n").is_err());
        assert!(read_polar_csv("kind,polar\nr,0.1\ntheta,0,1\nv,1,2,3\n").is_err());
    }
}
