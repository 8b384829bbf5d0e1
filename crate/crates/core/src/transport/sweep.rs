//! First-order upwind streaming on the Cartesian grid.
//!
//! For direction `Omega` the cell equation is
//! `(1/dt + sigma_t + sum_a |Omega_a|/h_a) u_i - sum_a |Omega_a|/h_a u_{up_a(i)} = s_i`,
//! where `up_a(i)` is the neighbour on the upwind side along axis `a` (or the
//! inflow boundary value). The matrix for `-Omega` is exactly the transpose
//! of the matrix for `Omega`.

use crate::geometry::SpatialGrid;

/// Boundary data on the inflow faces of a sweep.
pub enum Inflow<'a> {
    /// Zero incoming flux.
    Vacuum,
    Uniform(f64),
    /// Value on the inflow face of `voxel` normal to `axis`.
    Faces(&'a (dyn Fn(usize, usize) -> f64 + Sync)),
}

impl Inflow<'_> {
    #[inline]
    fn value(&self, voxel: usize, axis: usize) -> f64 {
        match self {
            Inflow::Vacuum => 0.0,
            Inflow::Uniform(c) => *c,
            Inflow::Faces(f) => f(voxel, axis),
        }
    }
}

#[inline]
fn axis_order(n: usize, positive: bool) -> impl Iterator<Item = usize> {
    (0..n).map(move |i| if positive { i } else { n - 1 - i })
}

/// Solve `(inv_dt + sigma_t + Omega . grad_upwind) u = source` by marching
/// the cells in upwind order. Exact for the discrete operator.
pub fn sweep_one_direction(
    grid: &SpatialGrid,
    sigma_t: &[f64],
    omega: [f64; 3],
    source: &[f64],
    inflow: &Inflow<'_>,
    inv_dt: f64,
    out: &mut [f64],
) {
    let dims = grid.dims();
    let cells = grid.cells3();
    let h = grid.h();
    let mut coef = [0.0; 3];
    for a in 0..dims {
        coef[a] = omega[a].abs() / h[a];
    }
    let pos = [omega[0] >= 0.0, omega[1] >= 0.0, omega[2] >= 0.0];
    let stride = [1, cells[0], cells[0] * cells[1]];

    for z in axis_order(cells[2], pos[2]) {
        for y in axis_order(cells[1], pos[1]) {
            for x in axis_order(cells[0], pos[0]) {
                let ijk = [x, y, z];
                let v = x + stride[1] * y + stride[2] * z;
                let mut num = source[v];
                let mut diag = inv_dt + sigma_t[v];
                for a in 0..dims {
                    let c = coef[a];
                    if c == 0.0 {
                        continue;
                    }
                    diag += c;
                    let upwind = if pos[a] {
                        (ijk[a] > 0).then(|| v - stride[a])
                    } else {
                        (ijk[a] + 1 < cells[a]).then(|| v + stride[a])
                    };
                    let u_up = match upwind {
                        Some(n) => out[n],
                        None => inflow.value(v, a),
                    };
                    num += c * u_up;
                }
                out[v] = num / diag;
            }
        }
    }
}

/// Apply the operator that `sweep_one_direction` inverts (vacuum inflow):
/// `out = (inv_dt + sigma_t + Omega . grad_upwind) u`.
pub fn apply_streaming(grid: &SpatialGrid, sigma_t: &[f64], omega: [f64; 3], u: &[f64], inv_dt: f64, out: &mut [f64]) {
    let dims = grid.dims();
    let cells = grid.cells3();
    let h = grid.h();
    let stride = [1, cells[0], cells[0] * cells[1]];
    for v in 0..grid.n_voxels() {
        let ijk = grid.ijk(v);
        let mut acc = (inv_dt + sigma_t[v]) * u[v];
        for a in 0..dims {
            let c = omega[a].abs() / h[a];
            if c == 0.0 {
                continue;
            }
            acc += c * u[v];
            let upwind = if omega[a] >= 0.0 {
                (ijk[a] > 0).then(|| v - stride[a])
            } else {
                (ijk[a] + 1 < cells[a]).then(|| v + stride[a])
            };
            if let Some(n) = upwind {
                acc -= c * u[n];
            }
        }
        out[v] = acc;
    }
}
