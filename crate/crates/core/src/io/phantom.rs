//! Voxel phantom text files.
//!
//! ```text
//! # comments and blank lines are ignored
//! dims 4 3            # cells per axis, x first
//! materials
//! 0 0 1 1             # one row per (y, z), x fastest; rows ordered y then z
//! 0 0 1 1
//! 0 0 0 0
//! regions
//! N N T T
//! N N T N
//! R N N N
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Region, RegionMask};

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub cells: Vec<usize>,
    /// Material index per voxel (x fastest).
    pub materials: Vec<usize>,
    pub regions: RegionMask,
}

impl Phantom {
    pub fn uniform(cells: &[usize], material: usize, region: Region) -> Self {
        let n = cells.iter().product();
        Self { cells: cells.to_vec(), materials: vec![material; n], regions: RegionMask::uniform(n, region) }
    }

    pub fn n_voxels(&self) -> usize {
        self.cells.iter().product()
    }
}

pub fn load_phantom(path: &Path) -> Result<Phantom> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_phantom(&text, path)
}

pub fn parse_phantom(text: &str, path: &Path) -> Result<Phantom> {
    let err = |message: String| Error::Phantom { path: path.to_path_buf(), message };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (_, header) = lines.next().ok_or_else(|| err("empty file".into()))?;
    let mut head = header.split_whitespace();
    if head.next() != Some("dims") {
        return Err(err(format!("expected `dims` header, found `{header}`")));
    }
    let cells = head
        .map(|t| t.parse::<usize>().map_err(|_| err(format!("bad cell count `{t}` in header"))))
        .collect::<Result<Vec<_>>>()?;
    if !(2..=3).contains(&cells.len()) || cells.contains(&0) {
        return Err(err(format!("header needs 2 or 3 positive cell counts, found {cells:?}")));
    }
    let nx = cells[0];
    let rows: usize = cells[1..].iter().product();

    let mut block = |name: &str| -> Result<Vec<Vec<String>>> {
        match lines.next() {
            Some((_, l)) if l == name => {}
            Some((n, l)) => return Err(err(format!("line {n}: expected `{name}`, found `{l}`"))),
            None => return Err(err(format!("missing `{name}` block"))),
        }
        let mut out = Vec::with_capacity(rows);
        for r in 0..rows {
            let (n, l) = lines.next().ok_or_else(|| err(format!("`{name}` block: expected {rows} rows, found {r}")))?;
            if l == "regions" || l == "materials" {
                return Err(err(format!("`{name}` block: expected {rows} rows, found {r} (line {n})")));
            }
            let row: Vec<String> = l.split_whitespace().map(str::to_owned).collect();
            if row.len() != nx {
                return Err(err(format!("line {n}: expected {nx} values, found {}", row.len())));
            }
            out.push(row);
        }
        Ok(out)
    };

    let mat_rows = block("materials")?;
    let reg_rows = block("regions")?;
    if let Some((n, l)) = lines.next() {
        return Err(err(format!("line {n}: expected end of file after {rows} region rows, found `{l}`")));
    }
    let materials = mat_rows
        .iter()
        .flatten()
        .map(|t| t.parse::<usize>().map_err(|_| err(format!("bad material index `{t}`"))))
        .collect::<Result<Vec<_>>>()?;
    let labels = reg_rows
        .iter()
        .flatten()
        .map(|t| Region::from_label(t).ok_or_else(|| err(format!("unknown region label `{t}` (expected T, N or R)"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Phantom { cells, materials, regions: RegionMask::new(labels) })
}

pub fn write_phantom(path: &Path, phantom: &Phantom) -> Result<()> {
    let mut s = String::from("dims");
    for c in &phantom.cells {
        s.push_str(&format!(" {c}"));
    }
    s.push('\n');
    let nx = phantom.cells[0];
    s.push_str("materials\n");
    for row in phantom.materials.chunks(nx) {
        let r: Vec<String> = row.iter().map(|m| m.to_string()).collect();
        s.push_str(&r.join(" "));
        s.push('\n');
    }
    s.push_str("regions\n");
    for row in phantom.regions.labels().chunks(nx) {
        let r: Vec<String> = row.iter().map(|m| m.label().to_string()).collect();
        s.push_str(&r.join(" "));
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}
