//! Phase-space arrays over (voxel, direction, energy node) and the discrete
//! `L^2(Z x S^{n-1} x [0, eps_max])` pairing.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldShape {
    pub voxels: usize,
    pub directions: usize,
    pub nodes: usize,
}

impl FieldShape {
    pub fn new(voxels: usize, directions: usize, nodes: usize) -> Self {
        Self { voxels, directions, nodes }
    }

    pub fn len(&self) -> usize {
        self.voxels * self.directions * self.nodes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Length of one energy slice.
    pub fn slice_len(&self) -> usize {
        self.voxels * self.directions
    }
}

/// Values stored node-major, then direction, then voxel: index
/// `(k * directions + m) * voxels + v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    shape: FieldShape,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(shape: FieldShape) -> Self {
        Self { shape, data: vec![0.0; shape.len()] }
    }

    pub fn constant(shape: FieldShape, value: f64) -> Self {
        Self { shape, data: vec![value; shape.len()] }
    }

    pub fn from_fn<F: FnMut(usize, usize, usize) -> f64>(shape: FieldShape, mut f: F) -> Self {
        let mut data = Vec::with_capacity(shape.len());
        for k in 0..shape.nodes {
            for m in 0..shape.directions {
                for v in 0..shape.voxels {
                    data.push(f(v, m, k));
                }
            }
        }
        Self { shape, data }
    }

    pub fn from_vec(shape: FieldShape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Shape(format!("expected {} values, got {}", shape.len(), data.len())));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> FieldShape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, v: usize, m: usize, k: usize) -> usize {
        (k * self.shape.directions + m) * self.shape.voxels + v
    }

    #[inline]
    pub fn get(&self, v: usize, m: usize, k: usize) -> f64 {
        self.data[self.index(v, m, k)]
    }

    #[inline]
    pub fn set(&mut self, v: usize, m: usize, k: usize, value: f64) {
        let i = self.index(v, m, k);
        self.data[i] = value;
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let n = self.shape.slice_len();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.shape.slice_len();
        &mut self.data[k * n..(k + 1) * n]
    }

    pub fn check_shape(&self, other: &Field) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|x| *x *= a);
    }

    pub fn scaled(&self, a: f64) -> Field {
        let mut f = self.clone();
        f.scale(a);
        f
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Field) {
        assert_eq!(self.shape, other.shape, "axpy on mismatched shapes");
        self.data.iter_mut().zip(&other.data).for_each(|(x, y)| *x += a * y);
    }

    /// `a * self + b * other`
    pub fn lincomb(&self, a: f64, other: &Field, b: f64) -> Field {
        assert_eq!(self.shape, other.shape, "lincomb on mismatched shapes");
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        Field { shape: self.shape, data }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        Field { shape: self.shape, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

/// Quadrature weights of the phase-space pairing:
/// `cell volume x w_m x c_k` for entry `(v, m, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    pub cell_volume: f64,
    pub angular: Vec<f64>,
    pub energy: Vec<f64>,
}

impl Measure {
    pub fn shape(&self, voxels: usize) -> FieldShape {
        FieldShape::new(voxels, self.angular.len(), self.energy.len())
    }

    fn check(&self, f: &Field) {
        assert_eq!(f.shape.directions, self.angular.len(), "direction count does not match measure");
        assert_eq!(f.shape.nodes, self.energy.len(), "node count does not match measure");
    }

    /// Weighted inner product, summed in a fixed order.
    pub fn inner(&self, a: &Field, b: &Field) -> f64 {
        self.check(a);
        assert_eq!(a.shape, b.shape, "inner product of mismatched shapes");
        let nv = a.shape.voxels;
        let mut total = 0.0;
        for (k, &ck) in self.energy.iter().enumerate() {
            for (m, &wm) in self.angular.iter().enumerate() {
                let off = (k * self.angular.len() + m) * nv;
                let s: f64 = a.data[off..off + nv].iter().zip(&b.data[off..off + nv]).map(|(x, y)| x * y).sum();
                total += ck * wm * s;
            }
        }
        total * self.cell_volume
    }

    pub fn norm(&self, a: &Field) -> f64 {
        self.inner(a, a).sqrt()
    }

    /// Weighted norm of `a - b`.
    pub fn distance(&self, a: &Field, b: &Field) -> f64 {
        self.norm(&a.lincomb(1.0, b, -1.0))
    }
}

/// Field sampled on remapped energy nodes `tau_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedField {
    pub field: Field,
    pub tau: Vec<f64>,
}

impl Deref for TransformedField {
    type Target = Field;
    fn deref(&self) -> &Field {
        &self.field
    }
}

impl DerefMut for TransformedField {
    fn deref_mut(&mut self) -> &mut Field {
        &mut self.field
    }
}

/// Solution of the adjoint problem; vanishes at `eps_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointField(pub Field);

impl AdjointField {
    pub fn into_field(self) -> Field {
        self.0
    }
}

impl Deref for AdjointField {
    type Target = Field;
    fn deref(&self) -> &Field {
        &self.0
    }
}
