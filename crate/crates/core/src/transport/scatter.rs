//! Discrete scattering operator
//! `(K phi)(x, Omega_m) = sum_{m'} w_{m'} sigma_s(x, Omega_{m'} . Omega_m) phi(x, Omega_{m'})`.

use rayon::prelude::*;

use crate::error::Result;
use crate::physics::CrossSections;
use crate::quadrature::AngularQuadrature;

/// Per-material dense angular matrices, precomputed once per problem.
#[derive(Debug, Clone)]
pub struct ScatteringOperator {
    n_dirs: usize,
    /// `matrices[mat][m * n_dirs + m'] = w_{m'} sigma_s(Omega_{m'} . Omega_m)`
    matrices: Vec<Vec<f64>>,
    voxel_material: Vec<usize>,
    active: bool,
}

impl ScatteringOperator {
    pub fn new(xs: &CrossSections, quad: &AngularQuadrature) -> Result<Self> {
        let n = quad.len();
        let dims = quad.dims();
        let mut matrices = Vec::with_capacity(xs.materials().len());
        for mat in xs.materials() {
            let mut a = vec![0.0; n * n];
            if mat.sigma_s != 0.0 {
                for m in 0..n {
                    for mp in 0..n {
                        a[m * n + mp] = quad.weight(mp) * mat.kernel_value(dims, quad.cosine(mp, m))?;
                    }
                }
            }
            matrices.push(a);
        }
        Ok(Self { n_dirs: n, matrices, voxel_material: xs.voxel_material().to_vec(), active: xs.has_scattering() })
    }

    /// False when every voxel has `sigma_s = 0`.
    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn matrix(&self, material: usize) -> &[f64] {
        &self.matrices[material]
    }

    /// `out = K phi` on one energy slice (direction-major layout).
    pub fn apply(&self, phi: &[f64], out: &mut [f64]) {
        let nv = self.voxel_material.len();
        let n = self.n_dirs;
        out.par_chunks_mut(nv).enumerate().for_each(|(m, row)| {
            for (v, o) in row.iter_mut().enumerate() {
                let a = &self.matrices[self.voxel_material[v]][m * n..(m + 1) * n];
                let mut s = 0.0;
                for (mp, &amp) in a.iter().enumerate() {
                    s += amp * phi[mp * nv + v];
                }
                *o = s;
            }
        });
    }
}

/// One-shot application of `K` to a slice.
pub fn apply_scattering(phi: &[f64], quad: &AngularQuadrature, xs: &CrossSections) -> Result<Vec<f64>> {
    let op = ScatteringOperator::new(xs, quad)?;
    let mut out = vec![0.0; phi.len()];
    op.apply(phi, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{kernel_eval, KernelKind, Material};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn isotropic_constant_flux() {
        let quad = AngularQuadrature::build(2, 8).unwrap();
        let xs = CrossSections::uniform(2, 4, Material::new("w", 1.0, 0.7, KernelKind::Isotropic));
        let c = 2.5;
        let phi = vec![c; 4 * 8];
        let out = apply_scattering(&phi, &quad, &xs).unwrap();
        for x in out {
            assert!((x - 0.7 * c).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_flux_gives_zero() {
        let quad = AngularQuadrature::build(3, 4).unwrap();
        let xs = CrossSections::uniform(3, 2, Material::new("w", 1.0, 0.7, KernelKind::HenyeyGreenstein { g: 0.5 }));
        let out = apply_scattering(&vec![0.0; 2 * quad.len()], &quad, &xs).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn matches_dense_matrix_oracle() {
        let quad = AngularQuadrature::build(2, 8).unwrap();
        let kind = KernelKind::HenyeyGreenstein { g: 0.6 };
        let xs = CrossSections::uniform(2, 1, Material::new("w", 1.0, 0.8, kind));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // brute force: build the matrix from angles directly
        let angle = |m: usize| (m as f64 + 0.5) * 2.0 * std::f64::consts::PI / 8.0;
        let mut expected = vec![0.0; 8];
        for m in 0..8 {
            for mp in 0..8 {
                let mu = (angle(m) - angle(mp)).cos();
                expected[m] += quad.weight(mp) * kernel_eval(kind, 0.8, 2, mu).unwrap() * phi[mp];
            }
        }
        let out = apply_scattering(&phi, &quad, &xs).unwrap();
        for (a, b) in out.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn weighted_matrix_is_symmetric() {
        for (dims, order) in [(2, 8), (3, 4)] {
            let quad = AngularQuadrature::build(dims, order).unwrap();
            let xs =
                CrossSections::uniform(dims, 1, Material::new("w", 1.0, 0.9, KernelKind::HenyeyGreenstein { g: 0.7 }));
            let op = ScatteringOperator::new(&xs, &quad).unwrap();
            let a = op.matrix(0);
            let n = quad.len();
            for m in 0..n {
                for mp in 0..n {
                    let lhs = quad.weight(m) * a[m * n + mp];
                    let rhs = quad.weight(mp) * a[mp * n + m];
                    // equal up to the rounding of one product reordering
                    assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * lhs.abs(), "{lhs} vs {rhs}");
                }
            }
        }
    }
}
