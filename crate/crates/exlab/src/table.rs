//! Result tables: CSV with a commented provenance header, and the golden-file
//! comparator.

use std::fmt::Write as _;

use thiserror::Error;

/// Formats like C's `%.17g`.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_g17(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        ResultTable { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the schema");
        self.rows.push(row);
    }

    /// CSV text: `# exlab <version>`, `# config_digest = <hex>`, one
    /// `# key = value` line per configuration entry, the header row, then
    /// the rows. LF line endings throughout.
    pub fn to_csv(&self, digest: &str, config_lines: &str) -> String {
        let mut out = String::new();
        writeln!(out, "# exlab {}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(out, "# config_digest = {digest}").unwrap();
        for line in config_lines.lines() {
            writeln!(out, "# {line}").unwrap();
        }
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GoldenError {
    #[error("{0} table has no config digest")]
    MissingDigest(&'static str),
    #[error("config digests differ: expected {expected}, got {actual}")]
    DigestMismatch { expected: String, actual: String },
    #[error("column headers differ")]
    HeaderMismatch,
    #[error("row counts differ: expected {expected}, got {actual}")]
    RowCount { expected: usize, actual: usize },
    #[error("cell ({row}, {col}) differs: expected {expected}, got {actual}")]
    Cell { row: usize, col: usize, expected: String, actual: String },
}

fn digest_of(text: &str) -> Option<&str> {
    text.lines().find_map(|l| l.strip_prefix("# config_digest = ")).map(str::trim).filter(|d| !d.is_empty())
}

fn body(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

/// Compares a table against a golden file. Both must carry a config
/// digest and the digests must agree; numeric cells may differ by
/// `rel_tol` (relative, with an absolute floor of `rel_tol`), other cells
/// must match exactly.
pub fn compare_golden(expected: &str, actual: &str, rel_tol: f64) -> Result<(), GoldenError> {
    let de = digest_of(expected).ok_or(GoldenError::MissingDigest("golden"))?;
    let da = digest_of(actual).ok_or(GoldenError::MissingDigest("candidate"))?;
    if de != da {
        return Err(GoldenError::DigestMismatch { expected: de.into(), actual: da.into() });
    }
    let (be, ba) = (body(expected), body(actual));
    if be.first() != ba.first() {
        return Err(GoldenError::HeaderMismatch);
    }
    if be.len() != ba.len() {
        return Err(GoldenError::RowCount { expected: be.len() - 1, actual: ba.len().saturating_sub(1) });
    }
    for (r, (le, la)) in be.iter().zip(&ba).enumerate().skip(1) {
        let ce: Vec<&str> = le.split(',').collect();
        let ca: Vec<&str> = la.split(',').collect();
        if ce.len() != ca.len() {
            return Err(GoldenError::HeaderMismatch);
        }
        for (c, (a, b)) in ce.iter().zip(&ca).enumerate() {
            let same = match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => x == y || (x - y).abs() <= rel_tol * x.abs().max(y.abs()).max(1.0),
                _ => a == b,
            };
            if !same {
                return Err(GoldenError::Cell { row: r - 1, col: c, expected: a.to_string(), actual: b.to_string() });
            }
        }
    }
    Ok(())
}
