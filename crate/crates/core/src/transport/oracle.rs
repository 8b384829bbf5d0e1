//! Characteristic shift for the collisionless problem.

use crate::error::{Error, Result};
use crate::geometry::SpatialGrid;
use crate::physics::EnergyMap;
use crate::quadrature::AngularQuadrature;

/// `int_s^eps 1/S`.
pub fn path_length(map: &EnergyMap, eps: f64, s: f64) -> f64 {
    map.r(eps) - map.r(s)
}

/// `(G(eps, s) eta)(x, Omega_m) = eta(x - Omega_m int_s^eps 1/S, m)` at every
/// voxel centre. Shifted points outside the domain give zero.
///
/// Returns one slice in the solver layout (direction-major).
pub fn free_streaming_oracle<F>(
    grid: &SpatialGrid,
    quad: &AngularQuadrature,
    map: &EnergyMap,
    eta: F,
    eps: f64,
    s: f64,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64; 3], usize) -> f64,
{
    if s > eps {
        return Err(Error::Domain(format!("free streaming runs forward only (s = {s} > eps = {eps})")));
    }
    let len = path_length(map, eps, s);
    let nv = grid.n_voxels();
    let mut out = vec![0.0; nv * quad.len()];
    for m in 0..quad.len() {
        let omega = quad.direction(m);
        for v in 0..nv {
            let c = grid.center(v);
            let mut x = [0.0; 3];
            for a in 0..3 {
                x[a] = c[a] - omega[a] * len;
            }
            if grid.contains(&x[..grid.dims()]) {
                out[m * nv + v] = eta(&x, m);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::StoppingPower;
    use crate::quadrature::{composite_gauss, gauss_legendre};

    fn setup(sp: StoppingPower) -> (SpatialGrid, AngularQuadrature, EnergyMap) {
        let grid = SpatialGrid::new(2, &[2.0, 2.0], &[8, 8]).unwrap();
        let quad = AngularQuadrature::build(2, 4).unwrap();
        let map = EnergyMap::build(sp, 1.0, 16).unwrap();
        (grid, quad, map)
    }

    #[test]
    fn zero_path_is_identity() {
        let (grid, quad, map) = setup(StoppingPower::Constant(1.0));
        let eta = |x: &[f64; 3], m: usize| x[0] + 2.0 * x[1] + m as f64;
        let out = free_streaming_oracle(&grid, &quad, &map, eta, 0.4, 0.4).unwrap();
        for m in 0..quad.len() {
            for v in 0..grid.n_voxels() {
                assert_eq!(out[m * grid.n_voxels() + v], eta(&grid.center(v), m));
            }
        }
    }

    #[test]
    fn unit_speed_translates_rigidly() {
        let (grid, quad, map) = setup(StoppingPower::Constant(1.0));
        let bump = |x: &[f64; 3]| (-((x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2)) / 0.1).exp();
        let out = free_streaming_oracle(&grid, &quad, &map, |x, _| bump(x), 0.5, 0.2).unwrap();
        let nv = grid.n_voxels();
        for m in 0..quad.len() {
            let o = quad.direction(m);
            for v in 0..nv {
                let c = grid.center(v);
                let x = [c[0] - 0.3 * o[0], c[1] - 0.3 * o[1], 0.0];
                let expected = if grid.contains(&x[..2]) { bump(&x) } else { 0.0 };
                assert!((out[m * nv + v] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_stopping_power_path_matches_quadrature() {
        let (_, _, map) = setup(StoppingPower::linear(1.0, 1.0, 1.0));
        let rule = gauss_legendre(10);
        for (eps, s) in [(0.9, 0.1), (0.5, 0.0), (1.0, 0.75)] {
            let reference = composite_gauss(|e| 1.0 / (1.0 + e), s, eps, 8, &rule);
            assert!((path_length(&map, eps, s) - reference).abs() < 1e-12);
            assert!((reference - ((1.0 + eps) / (1.0 + s)).ln()).abs() < 1e-13);
        }
    }

    #[test]
    fn leaving_the_domain_gives_zero() {
        let (grid, quad, map) = setup(StoppingPower::Constant(0.1));
        // path length 10 exceeds the domain
        let out = free_streaming_oracle(&grid, &quad, &map, |_, _| 1.0, 1.0, 0.0).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
    }
}
