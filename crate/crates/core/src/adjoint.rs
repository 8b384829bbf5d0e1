//! Adjoint of the discrete control-to-state map.
//!
//! With weights `W = vol x w_m x c_k` the adjoint of `X` is `W^{-1} X^T W`.
//! The per-slice operator `M_k = I/dtau_k + sigma_t + Omega . grad - K` has
//! the `(vol x w_m)`-adjoint `I/dtau_k + sigma_t - Omega . grad - K`, so the
//! backward march reuses the sweeps with the directions reversed:
//!
//! ```text
//! y_j  = c_j z_j / S_j                                   j = 1..K
//! M*_{j-1} xi_j = y_j + xi_{j+1} / dtau_j                (xi_{K+1} = 0)
//! lambda_{j-1} = S_{j-1} xi_j / c_{j-1},   lambda_K = 0
//! ```

use crate::error::Result;
use crate::field::{AdjointField, Field};
use crate::transport::{Sense, TransportProblem};

impl TransportProblem {
    /// `lambda = X^* r`, marched backward from `eps_max` with `lambda(eps_max) = 0`
    /// and zero data on the outflow boundary.
    pub fn solve_adjoint(&self, r: &Field) -> Result<AdjointField> {
        self.check(r)?;
        let energy = self.energy();
        let s = energy.s_nodes();
        let c = energy.weights();
        let nk = energy.intervals();
        let n = r.shape().slice_len();

        let mut lambda = Field::zeros(r.shape());
        let mut xi_next = vec![0.0; n];
        let mut xi = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut total_iters = 0;
        for j in (1..=nk).rev() {
            let scale = c[j] / s[j];
            let carry = if j < nk { 1.0 / energy.tau_step(j) } else { 0.0 };
            for ((out, z), x) in rhs.iter_mut().zip(r.slice(j)).zip(&xi_next) {
                *out = scale * z + carry * x;
            }
            let inv_dt = 1.0 / energy.tau_step(j - 1);
            total_iters += self.solve_slice(&rhs, inv_dt, Sense::Adjoint, &xi_next, &mut xi)?;
            let back = s[j - 1] / c[j - 1];
            lambda.slice_mut(j - 1).iter_mut().zip(&xi).for_each(|(l, x)| *l = back * x);
            std::mem::swap(&mut xi, &mut xi_next);
        }
        log::debug!("adjoint march: {total_iters} sweeps over {nk} steps");
        Ok(AdjointField(lambda))
    }

    /// `|<w, X^* z> - <X w, z>| / (|w| |z|)` in the weighted pairing; zero when
    /// either field vanishes.
    pub fn adjoint_identity_gap(&self, w: &Field, z: &Field) -> Result<f64> {
        self.check(w)?;
        self.check(z)?;
        let mu = self.measure();
        let denom = mu.norm(w) * mu.norm(z);
        if denom == 0.0 {
            return Ok(0.0);
        }
        let xw = self.solve_forward(w)?;
        let xz = self.solve_adjoint(z)?;
        Ok((mu.inner(w, &xz) - mu.inner(&xw, z)).abs() / denom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpatialGrid;
    use crate::physics::{CrossSections, EnergyMap, KernelKind, Material, StoppingPower};
    use crate::quadrature::AngularQuadrature;
    use crate::transport::SolverSettings;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(sigma_s: f64, sp: StoppingPower, cells: usize, order: usize, intervals: usize) -> TransportProblem {
        let grid = SpatialGrid::new(2, &[1.0, 1.0], &[cells, cells]).unwrap();
        let quad = AngularQuadrature::build(2, order).unwrap();
        let xs = CrossSections::uniform(2, grid.n_voxels(), Material::new("m", 1.0, sigma_s, KernelKind::Isotropic));
        let energy = EnergyMap::build(sp, 1.0, intervals).unwrap();
        let settings = SolverSettings { tolerance: 1e-13, max_iterations: 500 };
        TransportProblem::new(grid, quad, xs, energy, settings).unwrap()
    }

    fn random(p: &TransportProblem, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field::from_fn(p.shape(), |_, _, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn zero_source_gives_zero() {
        let p = problem(0.4, StoppingPower::linear(1.0, 1.0, 1.0), 4, 4, 6);
        let lam = p.solve_adjoint(&Field::zeros(p.shape())).unwrap();
        assert!(lam.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn terminal_slice_vanishes() {
        let p = problem(0.4, StoppingPower::linear(1.0, 1.0, 1.0), 4, 4, 6);
        let lam = p.solve_adjoint(&random(&p, 1)).unwrap();
        assert!(lam.slice(6).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn superposition() {
        let p = problem(0.4, StoppingPower::linear(1.0, 1.0, 1.0), 5, 4, 6);
        let (r1, r2) = (random(&p, 2), random(&p, 3));
        let l1 = p.solve_adjoint(&r1).unwrap();
        let l2 = p.solve_adjoint(&r2).unwrap();
        let l12 = p.solve_adjoint(&r1.lincomb(2.0, &r2, -0.5)).unwrap();
        let expected = l1.lincomb(2.0, &l2, -0.5);
        let mu = p.measure();
        assert!(mu.distance(&l12, &expected) <= 1e-12 * mu.norm(&expected));
    }

    #[test]
    fn gap_is_round_off_without_scattering() {
        let p = problem(0.0, StoppingPower::linear(1.0, 1.0, 1.0), 6, 8, 8);
        for seed in 0..3 {
            let gap = p.adjoint_identity_gap(&random(&p, 10 + seed), &random(&p, 20 + seed)).unwrap();
            assert!(gap <= 1e-13, "gap {gap}");
        }
    }

    #[test]
    fn gap_small_with_scattering() {
        let p = problem(0.4, StoppingPower::Constant(1.0), 6, 8, 8);
        let gap = p.adjoint_identity_gap(&random(&p, 4), &random(&p, 5)).unwrap();
        assert!(gap <= 1e-11, "gap {gap}");
    }

    #[test]
    fn one_voxel_backward_ode() {
        // one voxel, one pair of directions, no scattering, S = 1: the discrete
        // adjoint is the transpose of the implicit Euler recursion, so compare
        // with the continuous solution lambda(e) = int_e^1 exp(-a (s - e)) r ds
        // under refinement.
        let errors: Vec<f64> = [40, 80, 160]
            .iter()
            .map(|&k| {
                let grid = SpatialGrid::new(2, &[1e6, 1e6], &[1, 1]).unwrap();
                let quad = AngularQuadrature::build(2, 2).unwrap();
                let xs = CrossSections::uniform(2, 1, Material::new("m", 1.0, 0.0, KernelKind::Isotropic));
                let energy = EnergyMap::build(StoppingPower::Constant(1.0), 1.0, k).unwrap();
                let p = TransportProblem::new(grid, quad, xs, energy, SolverSettings::default()).unwrap();
                let a = 1.0 + 1.0 / 1e6;
                let r = Field::constant(p.shape(), 1.0);
                let lam = p.solve_adjoint(&r).unwrap();
                let mut err: f64 = 0.0;
                // skip the first node, whose half weight doubles the value
                for j in 1..=k {
                    let e = p.energy().nodes()[j];
                    let exact = (1.0 - (-a * (1.0 - e)).exp()) / a;
                    err = err.max((lam.get(0, 0, j) - exact).abs());
                }
                err
            })
            .collect();
        assert!(errors[2] < 0.02, "{errors:?}");
        assert!(errors[0] / errors[1] > 1.8 && errors[1] / errors[2] > 1.8, "{errors:?}");
    }
}
