//! Flat-file formats: grid fields, report CSV, small two-column tables.
//!
//! Floats are written with Rust's shortest round-trip representation, so
//! parsing a file and writing it again reproduces it byte for byte.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use dphase_core::verification::ReportRow;
use dphase_core::{Cylinder, GridField};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] dphase_core::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

pub const GRID_MAGIC: &str = "dphase-grid";
pub const GRID_VERSION: &str = "v1";

/// `{:?}` of an `f64`: shortest string that parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn grid_header(w: &GridField) -> String {
    let d = w.domain();
    let center: Vec<String> = d.center().iter().map(|c| fmt_f64(*c)).collect();
    format!(
        "{GRID_MAGIC} {GRID_VERSION} n={} nx={} nt={} center={} radius={} t_lo={} t_hi={}",
        w.dim(),
        w.nx(),
        w.nt(),
        center.join(","),
        fmt_f64(d.radius()),
        fmt_f64(d.t_lo()),
        fmt_f64(d.t_hi()),
    )
}

/// Header line, then one value per line in storage order (time slowest,
/// then axis 0 slowest within a slice).
pub fn write_grid<W: Write>(w: &GridField, mut out: W) -> std::io::Result<()> {
    let mut buf = String::with_capacity(w.values().len() * 20 + 128);
    buf.push_str(&grid_header(w));
    buf.push('\n');
    for v in w.values() {
        let _ = writeln!(buf, "{v:?}");
    }
    out.write_all(buf.as_bytes())
}

pub fn read_grid<R: BufRead>(input: R) -> Result<GridField, FormatError> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty file"))??;
    let mut toks = header.split_whitespace();
    if toks.next() != Some(GRID_MAGIC) {
        return Err(parse_err(1, format!("expected `{GRID_MAGIC}` at start of header")));
    }
    match toks.next() {
        Some(GRID_VERSION) => {}
        other => return Err(parse_err(1, format!("unsupported version {other:?}"))),
    }
    let mut n = None;
    let mut nx = None;
    let mut nt = None;
    let mut center = None;
    let mut radius = None;
    let mut t_lo = None;
    let mut t_hi = None;
    for tok in toks {
        let (k, v) = tok.split_once('=').ok_or_else(|| parse_err(1, format!("bad header token `{tok}`")))?;
        let num = |v: &str| v.parse::<f64>().map_err(|_| parse_err(1, format!("bad number `{v}` for {k}")));
        let int = |v: &str| v.parse::<usize>().map_err(|_| parse_err(1, format!("bad integer `{v}` for {k}")));
        match k {
            "n" => n = Some(int(v)?),
            "nx" => nx = Some(int(v)?),
            "nt" => nt = Some(int(v)?),
            "center" => center = Some(v.split(',').map(num).collect::<Result<Vec<f64>, _>>()?),
            "radius" => radius = Some(num(v)?),
            "t_lo" => t_lo = Some(num(v)?),
            "t_hi" => t_hi = Some(num(v)?),
            _ => return Err(parse_err(1, format!("unknown header key `{k}`"))),
        }
    }
    let missing = |k: &str| parse_err(1, format!("header is missing `{k}`"));
    let n = n.ok_or_else(|| missing("n"))?;
    let nx = nx.ok_or_else(|| missing("nx"))?;
    let nt = nt.ok_or_else(|| missing("nt"))?;
    let center = center.ok_or_else(|| missing("center"))?;
    if center.len() != n {
        return Err(parse_err(1, format!("center has {} entries, n = {n}", center.len())));
    }
    let domain = Cylinder::new(
        center,
        radius.ok_or_else(|| missing("radius"))?,
        t_lo.ok_or_else(|| missing("t_lo"))?,
        t_hi.ok_or_else(|| missing("t_hi"))?,
    )?;
    let expected = nx.checked_pow(n as u32).and_then(|s| s.checked_mul(nt)).ok_or_else(|| parse_err(1, "grid too large"))?;
    let mut values = Vec::with_capacity(expected);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        let v = s.parse::<f64>().map_err(|_| parse_err(i + 2, format!("bad value `{s}`")))?;
        values.push(v);
    }
    if values.len() != expected {
        return Err(parse_err(0, format!("expected {expected} values, found {}", values.len())));
    }
    Ok(GridField::new(domain, nx, nt, values)?)
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = ReportRow::COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        for v in r.numbers() {
            out.push_str(&fmt_f64(v));
            out.push(',');
        }
        out.push_str(&r.annotation);
        out.push('\n');
    }
    out
}

pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>, FormatError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty report"))?;
    if header != ReportRow::COLUMNS.join(",") {
        return Err(parse_err(1, "unexpected report header"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != ReportRow::COLUMNS.len() {
            return Err(parse_err(i + 2, format!("expected {} fields, found {}", ReportRow::COLUMNS.len(), fields.len())));
        }
        let mut nums = [0.0; 24];
        for (k, f) in fields[..24].iter().enumerate() {
            nums[k] = f
                .parse()
                .map_err(|_| parse_err(i + 2, format!("bad value `{f}` in column {}", ReportRow::COLUMNS[k])))?;
        }
        rows.push(ReportRow::from_numbers(nums, fields[24].to_string()));
    }
    Ok(rows)
}

/// Two named columns, e.g. `delta,omega` or `h,energy_gap_p`.
pub fn pair_csv(a: &str, b: &str, pairs: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut out = format!("{a},{b}\n");
    for (x, y) in pairs {
        let _ = writeln!(out, "{x:?},{y:?}");
    }
    out
}
