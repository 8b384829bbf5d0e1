//! Discrete-ordinates direction sets and Gauss-Legendre rules.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Surface measure of the unit sphere `S^{n-1}`: `2 pi` in 2D, `4 pi` in 3D.
pub fn sphere_measure(dims: usize) -> f64 {
    match dims {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("unsupported dimension {dims}"),
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
///
/// The rule is symmetrised so that `x_i = -x_{n-1-i}` holds bit-exactly.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess for the i-th largest root
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[n - 1 - i] = z;
        x[i] = -z;
        w[n - 1 - i] = wi;
        w[i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Integrate `f` over `[a, b]` with an `n`-point Gauss-Legendre rule on each of `pieces` subintervals.
pub fn composite_gauss<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (x, w) = rule;
    let len = (b - a) / pieces as f64;
    let mut total = 0.0;
    for p in 0..pieces {
        let lo = a + p as f64 * len;
        let mid = lo + 0.5 * len;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            s += wi * f(mid + 0.5 * len * xi);
        }
        total += 0.5 * len * s;
    }
    total
}

/// Direction set `{Omega_m}` with positive weights `{w_m}` on `S^{n-1}`.
///
/// Directions are stored as three-component vectors; the trailing component
/// is zero in 2D.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularQuadrature {
    dims: usize,
    directions: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl AngularQuadrature {
    /// Build the standard set of the given even order.
    ///
    /// 2D: `order` equally spaced directions at angles `(j + 1/2) 2 pi / order`,
    /// each with weight `2 pi / order`.
    /// 3D: product rule with `order` Gauss-Legendre polar cosines and
    /// `order` equally spaced azimuths (offset by half a step), `order^2` directions.
    pub fn build(dims: usize, order: usize) -> Result<Self> {
        if order < 2 || !order.is_multiple_of(2) {
            return Err(Error::Config(format!("quadrature order must be even and >= 2, got {order}")));
        }
        match dims {
            2 => {
                let w = 2.0 * PI / order as f64;
                let directions = (0..order)
                    .map(|j| {
                        let theta = (j as f64 + 0.5) * 2.0 * PI / order as f64;
                        [theta.cos(), theta.sin(), 0.0]
                    })
                    .collect();
                Ok(Self { dims, directions, weights: vec![w; order] })
            }
            3 => {
                let (mu, wmu) = gauss_legendre(order);
                let n_az = order;
                let dphi = 2.0 * PI / n_az as f64;
                let mut directions = Vec::with_capacity(order * n_az);
                let mut weights = Vec::with_capacity(order * n_az);
                for (&m, &wm) in mu.iter().zip(&wmu) {
                    let s = (1.0 - m * m).sqrt();
                    for j in 0..n_az {
                        let phi = (j as f64 + 0.5) * dphi;
                        directions.push([s * phi.cos(), s * phi.sin(), m]);
                        weights.push(wm * dphi);
                    }
                }
                Ok(Self { dims, directions, weights })
            }
            _ => Err(Error::Config(format!("quadrature dimension must be 2 or 3, got {dims}"))),
        }
    }

    /// Assemble a direction set from explicit parts (used for small hand-built sets).
    pub fn from_parts(dims: usize, directions: Vec<[f64; 3]>, weights: Vec<f64>) -> Self {
        assert_eq!(directions.len(), weights.len());
        Self { dims, directions, weights }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[[f64; 3]] {
        &self.directions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn direction(&self, m: usize) -> [f64; 3] {
        self.directions[m]
    }

    pub fn weight(&self, m: usize) -> f64 {
        self.weights[m]
    }

    /// Discrete `int_{S^{n-1}} f(Omega) dOmega`.
    pub fn integrate<F: Fn(&[f64; 3]) -> f64>(&self, f: F) -> f64 {
        self.directions.iter().zip(&self.weights).map(|(d, w)| w * f(d)).sum()
    }

    pub fn cosine(&self, m: usize, mp: usize) -> f64 {
        let a = &self.directions[m];
        let b = &self.directions[mp];
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }
}
