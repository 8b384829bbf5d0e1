//! Text and binary layouts of fields, dose maps, histories and reports.
//!
//! Field text:
//! ```text
//! field <voxels> <directions> <nodes>
//! <k> <m> <v_0> <v_1> ... <v_{V-1}>      # one row per (k, m), k outer
//! ```
//! Values use the shortest representation that parses back to the same bits.
//!
//! Field binary: the 8 bytes `BCSDF64\0`, then `voxels`, `directions`, `nodes`
//! as little-endian `u64`, then the values as little-endian `f64` in the same
//! order as the text rows.

use std::fmt::Write as _;
use std::path::Path;

use crate::dose::{DoseMap, DoseReport, Dvh};
use crate::error::{Error, Result};
use crate::field::{Field, FieldShape};
use crate::geometry::SpatialGrid;
use crate::optimize::HistoryEntry;

const MAGIC: &[u8; 8] = b"BCSDF64\0";
pub const HISTORY_HEADER: &str = "iter objective grad_norm kkt_residual step";

fn write(path: &Path, s: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn parse_f64(path: &Path, line: usize, t: &str) -> Result<f64> {
    t.parse::<f64>().map_err(|_| parse_err(path, line, format!("bad number `{t}`")))
}

fn parse_usize(path: &Path, line: usize, t: &str) -> Result<usize> {
    t.parse::<usize>().map_err(|_| parse_err(path, line, format!("bad integer `{t}`")))
}

pub fn field_to_string(f: &Field) -> String {
    let s = f.shape();
    let mut out = format!("field {} {} {}\n", s.voxels, s.directions, s.nodes);
    for k in 0..s.nodes {
        for m in 0..s.directions {
            let _ = write!(out, "{k} {m}");
            for v in 0..s.voxels {
                let _ = write!(out, " {:e}", f.get(v, m, k));
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_field(path: &Path, f: &Field) -> Result<()> {
    write(path, &field_to_string(f))
}

pub fn parse_field(text: &str, path: &Path) -> Result<Field> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (n, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 || h[0] != "field" {
        return Err(parse_err(path, n, format!("expected `field V M N`, found `{header}`")));
    }
    let shape = FieldShape::new(parse_usize(path, n, h[1])?, parse_usize(path, n, h[2])?, parse_usize(path, n, h[3])?);
    let mut data = Vec::with_capacity(shape.len());
    for k in 0..shape.nodes {
        for m in 0..shape.directions {
            let (n, line) =
                lines.next().ok_or_else(|| parse_err(path, n, format!("missing row for node {k}, direction {m}")))?;
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != shape.voxels + 2 {
                return Err(parse_err(
                    path,
                    n,
                    format!("expected {} values, found {}", shape.voxels, t.len().saturating_sub(2)),
                ));
            }
            if parse_usize(path, n, t[0])? != k || parse_usize(path, n, t[1])? != m {
                return Err(parse_err(path, n, format!("expected row `{k} {m}`, found `{} {}`", t[0], t[1])));
            }
            for tok in &t[2..] {
                data.push(parse_f64(path, n, tok)?);
            }
        }
    }
    if let Some((n, _)) = lines.next() {
        return Err(parse_err(path, n, "trailing rows after the last (node, direction) row"));
    }
    Field::from_vec(shape, data)
}

pub fn read_field(path: &Path) -> Result<Field> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_field(&text, path)
}

pub fn write_field_binary(path: &Path, f: &Field) -> Result<()> {
    let s = f.shape();
    let mut bytes = Vec::with_capacity(32 + 8 * s.len());
    bytes.extend_from_slice(MAGIC);
    for n in [s.voxels, s.directions, s.nodes] {
        bytes.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for x in f.data() {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_field_binary(path: &Path) -> Result<Field> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 32 || &bytes[..8] != MAGIC {
        return Err(parse_err(path, 0, "not a binary field file"));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().expect("8 bytes")) as usize;
    let shape = FieldShape::new(word(0), word(1), word(2));
    if bytes.len() != 32 + 8 * shape.len() {
        return Err(parse_err(
            path,
            0,
            format!("expected {} values, found {} bytes of data", shape.len(), bytes.len() - 32),
        ));
    }
    let data = bytes[32..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Field::from_vec(shape, data)
}

/// `dose nx ny nz`, then one row of `nx` values per `(y, z)`, `y` fastest.
pub fn dose_to_string(grid: &SpatialGrid, d: &DoseMap) -> String {
    let c = grid.cells3();
    let mut out = format!("dose {} {} {}\n", c[0], c[1], c[2]);
    for row in d.values.chunks(c[0]) {
        let r: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
        out.push_str(&r.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_dose(path: &Path, grid: &SpatialGrid, d: &DoseMap) -> Result<()> {
    if d.len() != grid.n_voxels() {
        return Err(Error::Shape(format!("dose has {} voxels, grid {}", d.len(), grid.n_voxels())));
    }
    write(path, &dose_to_string(grid, d))
}

pub fn read_dose(path: &Path) -> Result<(Vec<usize>, DoseMap)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (n, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 || h[0] != "dose" {
        return Err(parse_err(path, n, format!("expected `dose nx ny nz`, found `{header}`")));
    }
    let cells = h[1..].iter().map(|t| parse_usize(path, n, t)).collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(cells.iter().product());
    for (n, line) in lines {
        let row = line.split_whitespace().map(|t| parse_f64(path, n, t)).collect::<Result<Vec<_>>>()?;
        if row.len() != cells[0] {
            return Err(parse_err(path, n, format!("expected {} values, found {}", cells[0], row.len())));
        }
        values.extend(row);
    }
    if values.len() != cells.iter().product::<usize>() {
        return Err(parse_err(
            path,
            0,
            format!("expected {} rows, found {}", cells[1] * cells[2], values.len() / cells[0]),
        ));
    }
    Ok((cells, DoseMap { values }))
}

pub fn history_to_string(history: &[HistoryEntry]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for h in history {
        let _ = writeln!(out, "{} {:e} {:e} {:e} {:e}", h.iteration, h.objective, h.grad_norm, h.kkt, h.step);
    }
    out
}

pub fn write_history(path: &Path, history: &[HistoryEntry]) -> Result<()> {
    write(path, &history_to_string(history))
}

pub fn read_history(path: &Path) -> Result<Vec<HistoryEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h.trim() == HISTORY_HEADER => {}
        _ => return Err(parse_err(path, 1, format!("expected header `{HISTORY_HEADER}`"))),
    }
    let mut out = Vec::new();
    for (n, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 5 {
            return Err(parse_err(path, n, format!("expected 5 columns, found {}", t.len())));
        }
        out.push(HistoryEntry {
            iteration: parse_usize(path, n, t[0])?,
            objective: parse_f64(path, n, t[1])?,
            grad_norm: parse_f64(path, n, t[2])?,
            kkt: parse_f64(path, n, t[3])?,
            step: parse_f64(path, n, t[4])?,
        });
    }
    Ok(out)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:e}"))
}

pub fn report_to_string(report: &DoseReport, dvh: &Dvh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "region count min mean max");
    for r in &report.regions {
        let _ = writeln!(out, "{} {} {} {} {}", r.region.name(), r.count, opt(r.min), opt(r.mean), opt(r.max));
    }
    let _ = writeln!(out, "d_min {:e} tumor_underdose_fraction {:e}", report.d_min, report.tumor_underdose);
    let _ = writeln!(out, "d_max {:e} risk_overdose_fraction {:e}", report.d_max, report.risk_overdose);
    let _ = writeln!(out, "dvh dose {}", dvh.curves.iter().map(|c| c.region.name()).collect::<Vec<_>>().join(" "));
    for (j, d) in dvh.edges.iter().enumerate() {
        let _ = write!(out, "dvh {d:e}");
        for c in &dvh.curves {
            let _ = write!(out, " {:e}", c.fractions[j]);
        }
        out.push('\n');
    }
    for c in dvh.curves.iter().filter(|c| c.empty) {
        let _ = writeln!(out, "empty_region {}", c.region.name());
    }
    out
}

pub fn write_report(path: &Path, report: &DoseReport, dvh: &Dvh) -> Result<()> {
    write(path, &report_to_string(report, dvh))
}
