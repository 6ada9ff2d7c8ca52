//! Tables (CSV, JSON), mesh dumps and MatrixMarket export.

use std::io::{BufRead, Write};

use cutnitsche_core::convergence::{ConvergenceRow, ConvergenceTable};
use cutnitsche_core::mesh::Mesh;
use cutnitsche_core::sparse::{CsrMatrix, TripletBuilder};
use cutnitsche_core::Point2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::study::{RunConfig, SweepRow};

pub const CSV_HEADER: [&str; 10] = [
    "level", "h", "ndof", "err_l2", "err_energy", "err_h1_1", "err_h1_2", "eoc_l2", "eoc_energy", "cond",
];

pub const SWEEP_HEADER: [&str; 3] = ["offset", "cond", "cond_no_ghost"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Shortest round-trip text; empty for undefined, `inf` for infinite.
fn fmt_opt(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x.is_infinite() => "inf".into(),
        Some(x) => format!("{x}"),
    }
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    match s.trim() {
        "" => Ok(None),
        "inf" => Ok(Some(f64::INFINITY)),
        t => t
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("not a number: {t:?}"))),
    }
}

pub fn write_table_csv<W: Write>(table: &ConvergenceTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in table.rows() {
        w.write_record([
            r.level.to_string(),
            format!("{}", r.h),
            r.ndof.to_string(),
            format!("{}", r.err_l2),
            format!("{}", r.err_energy),
            format!("{}", r.err_h1[0]),
            format!("{}", r.err_h1[1]),
            fmt_opt(r.eoc_l2),
            fmt_opt(r.eoc_energy),
            fmt_opt(r.cond),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table_csv<R: std::io::Read>(input: R) -> Result<Vec<ConvergenceRow>> {
    let mut rd = csv::Reader::from_reader(input);
    if rd.headers()?.iter().ne(CSV_HEADER) {
        return Err(Error::Config("unexpected CSV header".into()));
    }
    let num = |s: &str| -> Result<f64> { parse_opt(s)?.ok_or_else(|| Error::Config("missing value".into())) };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        rows.push(ConvergenceRow {
            level: f(0).parse().map_err(|_| Error::Config("bad level".into()))?,
            h: num(f(1))?,
            ndof: f(2).parse().map_err(|_| Error::Config("bad ndof".into()))?,
            err_l2: num(f(3))?,
            err_energy: num(f(4))?,
            err_h1: [num(f(5))?, num(f(6))?],
            eoc_l2: parse_opt(f(7))?,
            eoc_energy: parse_opt(f(8))?,
            cond: parse_opt(f(9))?,
        });
    }
    Ok(rows)
}

/// One row of the JSON document; the fields mirror the CSV columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonRow {
    pub level: usize,
    pub h: f64,
    pub ndof: usize,
    pub err_l2: f64,
    pub err_energy: f64,
    pub err_h1_1: f64,
    pub err_h1_2: f64,
    pub eoc_l2: Option<f64>,
    pub eoc_energy: Option<f64>,
    /// `null` when not estimated or singular; see `singular`
    pub cond: Option<f64>,
    #[serde(default)]
    pub singular: bool,
}

impl From<&ConvergenceRow> for JsonRow {
    fn from(r: &ConvergenceRow) -> Self {
        let singular = r.cond.is_some_and(|c| !c.is_finite());
        Self {
            level: r.level,
            h: r.h,
            ndof: r.ndof,
            err_l2: r.err_l2,
            err_energy: r.err_energy,
            err_h1_1: r.err_h1[0],
            err_h1_2: r.err_h1[1],
            eoc_l2: r.eoc_l2,
            eoc_energy: r.eoc_energy,
            cond: r.cond.filter(|c| c.is_finite()),
            singular,
        }
    }
}

impl From<&JsonRow> for ConvergenceRow {
    fn from(r: &JsonRow) -> Self {
        Self {
            level: r.level,
            h: r.h,
            ndof: r.ndof,
            err_l2: r.err_l2,
            err_energy: r.err_energy,
            err_h1: [r.err_h1_1, r.err_h1_2],
            eoc_l2: r.eoc_l2,
            eoc_energy: r.eoc_energy,
            cond: if r.singular { Some(f64::INFINITY) } else { r.cond },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub case: String,
    pub variant: String,
    pub k: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub gamma_g: f64,
    pub position: Option<f64>,
    pub n0: usize,
    pub levels: usize,
    pub solver: String,
}

impl From<&RunConfig> for RunInfo {
    fn from(c: &RunConfig) -> Self {
        Self {
            case: c.case.as_str().into(),
            variant: c.variant.as_str().into(),
            k: c.k,
            mu1: c.mu1,
            mu2: c.mu2,
            gamma_g: c.gamma_g,
            position: c.position,
            n0: c.n0,
            levels: c.levels,
            solver: c.solver.as_str().into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonTable {
    pub config: RunInfo,
    pub rows: Vec<JsonRow>,
}

pub fn write_table_json<W: Write>(table: &ConvergenceTable, config: &RunConfig, mut out: W) -> Result<()> {
    let doc = JsonTable {
        config: config.into(),
        rows: table.rows().iter().map(JsonRow::from).collect(),
    };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_table_json<R: std::io::Read>(input: R) -> Result<JsonTable> {
    Ok(serde_json::from_reader(input)?)
}

pub fn write_table<W: Write>(table: &ConvergenceTable, config: &RunConfig, format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => write_table_csv(table, out),
        Format::Json => write_table_json(table, config, out),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonSweepRow {
    pub offset: f64,
    pub cond: Option<f64>,
    pub singular: bool,
    pub cond_no_ghost: Option<f64>,
    pub singular_no_ghost: bool,
}

pub fn write_sweep<W: Write>(rows: &[SweepRow], format: Format, mut out: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(SWEEP_HEADER)?;
            for r in rows {
                w.write_record([format!("{}", r.offset), fmt_opt(Some(r.cond)), fmt_opt(r.cond_no_ghost)])?;
            }
            w.flush()?;
        }
        Format::Json => {
            let doc: Vec<JsonSweepRow> = rows
                .iter()
                .map(|r| JsonSweepRow {
                    offset: r.offset,
                    cond: Some(r.cond).filter(|c| c.is_finite()),
                    singular: !r.cond.is_finite(),
                    cond_no_ghost: r.cond_no_ghost.filter(|c| c.is_finite()),
                    singular_no_ghost: r.cond_no_ghost.is_some_and(|c| !c.is_finite()),
                })
                .collect();
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// `v x y` per vertex, then `c i j k` per cell (zero-based indices).
pub fn write_mesh<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    for v in mesh.vertices() {
        writeln!(out, "v {} {}", v.x, v.y)?;
    }
    for c in mesh.cells() {
        writeln!(out, "c {} {} {}", c[0], c[1], c[2])?;
    }
    Ok(())
}

/// Vertices and cells of a text mesh dump.
pub fn read_mesh<R: BufRead>(input: R) -> Result<(Vec<Point2>, Vec<[usize; 3]>)> {
    let mut vertices = Vec::new();
    let mut cells = Vec::new();
    let bad = |l: &str| Error::Config(format!("bad mesh line: {l:?}"));
    for line in input.lines() {
        let line = line?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let x = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad(&line))?;
                let y = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad(&line))?;
                vertices.push(Point2::new(x, y));
            }
            Some("c") => {
                let mut c = [0usize; 3];
                for slot in &mut c {
                    *slot = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad(&line))?;
                }
                cells.push(c);
            }
            None => {}
            Some(_) => return Err(bad(&line)),
        }
    }
    Ok((vertices, cells))
}

/// Coordinate format, general real matrix, one-based indices.
pub fn write_matrix_market<W: Write>(a: &CsrMatrix, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.iter() {
        writeln!(out, "{} {} {}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read_matrix_market<R: BufRead>(input: R) -> Result<CsrMatrix> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if !header.to_ascii_lowercase().starts_with("%%matrixmarket matrix coordinate real general") {
        return Err(Error::Config("unsupported MatrixMarket header".into()));
    }
    let bad = |l: &str| Error::Config(format!("bad MatrixMarket line: {l:?}"));
    let mut builder: Option<TripletBuilder> = None;
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        if f.len() != 3 {
            return Err(bad(t));
        }
        match builder.as_mut() {
            None => {
                let n: usize = f[0].parse().map_err(|_| bad(t))?;
                let m: usize = f[1].parse().map_err(|_| bad(t))?;
                builder = Some(TripletBuilder::new(n, m));
            }
            Some(b) => {
                let i: usize = f[0].parse().map_err(|_| bad(t))?;
                let j: usize = f[1].parse().map_err(|_| bad(t))?;
                let v: f64 = f[2].parse().map_err(|_| bad(t))?;
                if i == 0 || j == 0 {
                    return Err(bad(t));
                }
                b.push(i - 1, j - 1, v);
            }
        }
    }
    Ok(builder.ok_or_else(|| Error::Config("missing size line".into()))?.build())
}
