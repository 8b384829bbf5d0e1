//! Oracles shared by the integration tests. Everything here is written
//! against the equations directly and only borrows `Field` as a container.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use bcsd::physics::{CrossSections, EnergyMap, KernelKind, Material, StoppingPower};
use bcsd::{AngularQuadrature, Field, FieldShape, SolverSettings, SpatialGrid, TransportProblem};

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Homogeneous 2D problem on the unit square with `S(eps) = 1 + eps`.
#[derive(Debug, Clone, Copy)]
pub struct Slab {
    pub cells: usize,
    pub intervals: usize,
    pub dirs: usize,
    pub sigma_t: f64,
    pub sigma_s: f64,
}

impl Slab {
    pub fn reference(cells: usize) -> Self {
        Self { cells, intervals: cells, dirs: 8, sigma_t: 1.0, sigma_s: 0.4 }
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn de(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    pub fn n_voxels(&self) -> usize {
        self.cells * self.cells
    }

    pub fn shape(&self) -> FieldShape {
        FieldShape::new(self.n_voxels(), self.dirs, self.intervals + 1)
    }

    pub fn eps(&self, k: usize) -> f64 {
        k as f64 * self.de()
    }

    pub fn centre(&self, v: usize) -> [f64; 2] {
        let (i, j) = (v % self.cells, v / self.cells);
        [(i as f64 + 0.5) * self.h(), (j as f64 + 0.5) * self.h()]
    }

    /// `(Omega_m, w_m)`: equally spaced angles on the circle.
    pub fn directions(&self) -> Vec<([f64; 2], f64)> {
        let n = self.dirs;
        (0..n)
            .map(|j| {
                let a = (j as f64 + 0.5) * 2.0 * PI / n as f64;
                ([a.cos(), a.sin()], 2.0 * PI / n as f64)
            })
            .collect()
    }

    /// The same problem assembled by the library.
    pub fn problem(&self, tolerance: f64) -> TransportProblem {
        let grid = SpatialGrid::new(2, &[1.0, 1.0], &[self.cells, self.cells]).unwrap();
        let quad = AngularQuadrature::build(2, self.dirs).unwrap();
        let xs = CrossSections::uniform(
            2,
            self.n_voxels(),
            Material::new("water", self.sigma_t, self.sigma_s, KernelKind::Isotropic),
        );
        let energy = EnergyMap::build(StoppingPower::linear(1.0, 1.0, 1.0), 1.0, self.intervals).unwrap();
        TransportProblem::new(grid, quad, xs, energy, SolverSettings { tolerance, max_iterations: 1000 }).unwrap()
    }

    /// `<a, b> = sum h^2 w_m c_k a b` with trapezoid `c_k`.
    pub fn inner(&self, a: &Field, b: &Field) -> f64 {
        let dirs = self.directions();
        let mut total = 0.0;
        for k in 0..=self.intervals {
            let ck = if k == 0 || k == self.intervals { 0.5 * self.de() } else { self.de() };
            for (m, (_, w)) in dirs.iter().enumerate() {
                for v in 0..self.n_voxels() {
                    total += ck * w * a.get(v, m, k) * b.get(v, m, k);
                }
            }
        }
        total * self.h() * self.h()
    }

    pub fn norm(&self, a: &Field) -> f64 {
        self.inner(a, a).sqrt()
    }

    pub fn distance(&self, a: &Field, b: &Field) -> f64 {
        self.norm(&a.lincomb(1.0, b, -1.0))
    }

    /// Solve `(a + sigma_t + Omega . grad - sigma_s / (2 pi) int) u = rhs` with
    /// upwind differences, vacuum inflow and source iteration. `rhs` and `u`
    /// hold one value per (direction, voxel), direction-major.
    pub fn solve_slice(&self, a: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.cells;
        let nv = self.n_voxels();
        let h = self.h();
        let dirs = self.directions();
        let mut u = vec![0.0; nv * self.dirs];
        for _ in 0..2000 {
            let mut scalar = vec![0.0; nv];
            for (m, (_, w)) in dirs.iter().enumerate() {
                for v in 0..nv {
                    scalar[v] += w * u[m * nv + v];
                }
            }
            let mut next = vec![0.0; nv * self.dirs];
            for (m, (om, _)) in dirs.iter().enumerate() {
                let (cx, cy) = (om[0].abs() / h, om[1].abs() / h);
                let diag = a + self.sigma_t + cx + cy;
                let is: Vec<usize> = if om[0] > 0.0 { (0..n).collect() } else { (0..n).rev().collect() };
                let js: Vec<usize> = if om[1] > 0.0 { (0..n).collect() } else { (0..n).rev().collect() };
                for &j in &js {
                    for &i in &is {
                        let v = i + n * j;
                        let up_x = if om[0] > 0.0 { i.checked_sub(1) } else { (i + 1 < n).then_some(i + 1) };
                        let up_y = if om[1] > 0.0 { j.checked_sub(1) } else { (j + 1 < n).then_some(j + 1) };
                        let mut s = rhs[m * nv + v] + self.sigma_s / (2.0 * PI) * scalar[v];
                        if let Some(ii) = up_x {
                            s += cx * next[m * nv + ii + n * j];
                        }
                        if let Some(jj) = up_y {
                            s += cy * next[m * nv + i + n * jj];
                        }
                        next[m * nv + v] = s / diag;
                    }
                }
            }
            let diff: f64 = next.iter().zip(&u).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            let size: f64 = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            u = next;
            if self.sigma_s == 0.0 || diff <= 1e-14 * size.max(1e-300) {
                break;
            }
        }
        u
    }

    /// `(S_{k+1} psi_{k+1} - S_k psi_k) / h + B psi_{k+1} = q_{k+1}`, marched in `eps`.
    pub fn direct_march(&self, q: &Field) -> Field {
        let nv = self.n_voxels();
        let s = |e: f64| 1.0 + e;
        let de = self.de();
        let mut psi = Field::zeros(self.shape());
        for k in 0..self.intervals {
            let (sk, sk1) = (s(self.eps(k)), s(self.eps(k + 1)));
            let mut rhs = vec![0.0; nv * self.dirs];
            for m in 0..self.dirs {
                for v in 0..nv {
                    rhs[m * nv + v] = sk * psi.get(v, m, k) / de + q.get(v, m, k + 1);
                }
            }
            let u = self.solve_slice(sk1 / de, &rhs);
            for m in 0..self.dirs {
                for v in 0..nv {
                    psi.set(v, m, k + 1, u[m * nv + v]);
                }
            }
        }
        psi
    }

    pub fn sample<F: Fn([f64; 2], f64) -> f64>(&self, f: F) -> Field {
        Field::from_fn(self.shape(), |v, _, k| f(self.centre(v), self.eps(k)))
    }

    /// Collisionless solution with `S = 1 + eps`, so `r(eps) = ln(1 + eps)`:
    /// `psi = 1/(1 + eps) int_0^eps q(x - Omega ln((1 + eps)/(1 + s)), s) ds`.
    pub fn collisionless<F: Fn([f64; 2], f64) -> f64>(&self, q: F) -> Field {
        // 5-point Gauss-Legendre on 24 pieces
        const X: [f64; 5] =
            [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
        const W: [f64; 5] = [
            0.236_926_885_056_189_1,
            0.478_628_670_499_366_5,
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
        ];
        const PIECES: usize = 24;
        let dirs = self.directions();
        let mut psi = Field::zeros(self.shape());
        for k in 1..=self.intervals {
            let e = self.eps(k);
            let len = e / PIECES as f64;
            let mut pts = Vec::new();
            for p in 0..PIECES {
                let mid = (p as f64 + 0.5) * len;
                for (x, w) in X.iter().zip(W) {
                    let s = mid + 0.5 * len * x;
                    pts.push((s, 0.5 * len * w, ((1.0 + e) / (1.0 + s)).ln()));
                }
            }
            for (m, (om, _)) in dirs.iter().enumerate() {
                for v in 0..self.n_voxels() {
                    let c = self.centre(v);
                    let mut total = 0.0;
                    for &(s, w, l) in &pts {
                        let x = [c[0] - om[0] * l, c[1] - om[1] * l];
                        if (0.0..=1.0).contains(&x[0]) && (0.0..=1.0).contains(&x[1]) {
                            total += w * q(x, s);
                        }
                    }
                    psi.set(v, m, k, total / (1.0 + e));
                }
            }
        }
        psi
    }
}

/// Smooth test source, a Gaussian of width 1/4 centred in the unit square.
pub fn gaussian_source(x: [f64; 2], eps: f64) -> f64 {
    let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
    (1.0 + eps) * (-r2 / (2.0 * 0.0625)).exp()
}

/// Least-squares slope of `-log e` against `log n`.
pub fn fitted_order(cells: &[usize], errors: &[f64]) -> f64 {
    let n = cells.len() as f64;
    let xs: Vec<f64> = cells.iter().map(|&c| (c as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| -e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Moller stopping power written out term by term.
pub fn moller(e: f64, rho: f64, eb: f64, re: f64) -> f64 {
    let pre = 2.0 * PI * re * re * rho * (e + 1.0).powi(2) / (e * (e + 1.0));
    let t1 = e / (e - eb);
    let t2 = 2.0 * ((e - eb) / (2.0 * eb * (e - eb))).ln();
    let t3 = ((e - eb).powi(2) / 4.0 - eb * eb) / (2.0 * (e + 1.0).powi(2));
    let t4 = -(2.0 * e + 1.0) / (e + 1.0).powi(2) * 2f64.ln();
    pre * (t1 + t2 + t3 + t4)
}
