//! Uniform Cartesian grids over a box domain, region labels and the
//! inflow/outflow classification of boundary faces.

use crate::error::{Error, Result};
use crate::quadrature::AngularQuadrature;

/// Uniform cell-centred grid on `[0, extent_0] x ... x [0, extent_{d-1}]`.
///
/// Voxels are numbered with the x index varying fastest, then y, then z.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    dims: usize,
    extent: [f64; 3],
    cells: [usize; 3],
    h: [f64; 3],
}

impl SpatialGrid {
    pub fn new(dims: usize, extent: &[f64], cells: &[usize]) -> Result<Self> {
        if dims != 2 && dims != 3 {
            return Err(Error::Config(format!("grid dimension must be 2 or 3, got {dims}")));
        }
        if extent.len() != dims || cells.len() != dims {
            return Err(Error::Config(format!(
                "grid needs {dims} extents and {dims} cell counts, got {} and {}",
                extent.len(),
                cells.len()
            )));
        }
        let mut e = [1.0; 3];
        let mut c = [1usize; 3];
        let mut h = [1.0; 3];
        for a in 0..dims {
            if !(extent[a].is_finite() && extent[a] > 0.0) {
                return Err(Error::Config(format!("grid extent along axis {a} must be positive, got {}", extent[a])));
            }
            if cells[a] == 0 {
                return Err(Error::Config(format!("grid cell count along axis {a} must be positive")));
            }
            e[a] = extent[a];
            c[a] = cells[a];
            h[a] = extent[a] / cells[a] as f64;
        }
        Ok(Self { dims, extent: e, cells: c, h })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent[..self.dims]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dims]
    }

    pub fn h(&self) -> &[f64] {
        &self.h[..self.dims]
    }

    /// Cell counts padded to three axes (trailing axes have one cell).
    pub fn cells3(&self) -> [usize; 3] {
        self.cells
    }

    pub fn n_voxels(&self) -> usize {
        self.cells.iter().product()
    }

    /// Cell area (2D) or volume (3D).
    pub fn cell_volume(&self) -> f64 {
        self.h[..self.dims].iter().product()
    }

    /// Measure of the whole domain.
    pub fn domain_measure(&self) -> f64 {
        self.extent[..self.dims].iter().product()
    }

    #[inline]
    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.cells[0] * (ijk[1] + self.cells[1] * ijk[2])
    }

    #[inline]
    pub fn ijk(&self, v: usize) -> [usize; 3] {
        let i = v % self.cells[0];
        let rest = v / self.cells[0];
        [i, rest % self.cells[1], rest / self.cells[1]]
    }

    pub fn center(&self, v: usize) -> [f64; 3] {
        let ijk = self.ijk(v);
        let mut x = [0.0; 3];
        for a in 0..self.dims {
            x[a] = (ijk[a] as f64 + 0.5) * self.h[a];
        }
        x
    }

    /// Whether a point lies in the closed box.
    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dims).all(|a| x[a] >= 0.0 && x[a] <= self.extent[a])
    }

    /// Grid with every axis refined by an integer factor.
    pub fn refined(&self, factor: usize) -> Self {
        let cells: Vec<usize> = self.cells().iter().map(|c| c * factor).collect();
        Self::new(self.dims, self.extent(), &cells).expect("refinement of a valid grid is valid")
    }
}

/// Tissue class of a voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Tumor,
    Normal,
    Risk,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Tumor, Region::Normal, Region::Risk];

    pub fn label(self) -> char {
        match self {
            Region::Tumor => 'T',
            Region::Normal => 'N',
            Region::Risk => 'R',
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "T" | "t" => Some(Region::Tumor),
            "N" | "n" => Some(Region::Normal),
            "R" | "r" => Some(Region::Risk),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::Tumor => "tumor",
            Region::Normal => "normal",
            Region::Risk => "risk",
        }
    }
}

/// One label per voxel; the three regions partition the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    labels: Vec<Region>,
}

impl RegionMask {
    pub fn new(labels: Vec<Region>) -> Self {
        Self { labels }
    }

    pub fn uniform(n_voxels: usize, region: Region) -> Self {
        Self { labels: vec![region; n_voxels] }
    }

    pub fn labels(&self) -> &[Region] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn count(&self, region: Region) -> usize {
        self.labels.iter().filter(|&&r| r == region).count()
    }

    pub fn voxels(&self, region: Region) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().enumerate().filter(move |(_, &r)| r == region).map(|(v, _)| v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `n . Omega < 0`
    Inflow,
    /// `n . Omega > 0`
    Outflow,
    /// `n . Omega == 0`
    Tangential,
}

/// A boundary face of a voxel paired with one quadrature direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    pub voxel: usize,
    pub axis: usize,
    pub side: Side,
    pub normal: [f64; 3],
    pub direction: usize,
    pub orientation: Orientation,
}

/// Outward unit normal of the face of the box on `axis`/`side`.
pub fn face_normal(axis: usize, side: Side) -> [f64; 3] {
    let mut n = [0.0; 3];
    n[axis] = match side {
        Side::Low => -1.0,
        Side::High => 1.0,
    };
    n
}

/// Classify every (boundary face, direction) pair by the sign of `n . Omega`.
pub fn classify_boundary(grid: &SpatialGrid, quad: &AngularQuadrature) -> Vec<BoundaryFace> {
    let cells = grid.cells3();
    let mut out = Vec::new();
    for v in 0..grid.n_voxels() {
        let ijk = grid.ijk(v);
        for axis in 0..grid.dims() {
            for side in [Side::Low, Side::High] {
                let on_boundary = match side {
                    Side::Low => ijk[axis] == 0,
                    Side::High => ijk[axis] + 1 == cells[axis],
                };
                if !on_boundary {
                    continue;
                }
                let normal = face_normal(axis, side);
                for (m, omega) in quad.directions().iter().enumerate() {
                    let dot: f64 = (0..grid.dims()).map(|a| normal[a] * omega[a]).sum();
                    let orientation = if dot < 0.0 {
                        Orientation::Inflow
                    } else if dot > 0.0 {
                        Orientation::Outflow
                    } else {
                        Orientation::Tangential
                    };
                    out.push(BoundaryFace { voxel: v, axis, side, normal, direction: m, orientation });
                }
            }
        }
    }
    out
}
