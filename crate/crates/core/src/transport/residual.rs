//! Discrete residuals of the slowing-down equation under the solver's own stencils.
//!
//! With `phi_k = S_k psi_k` the march solves
//! `(phi_{k+1} - phi_k) / dtau_k + B phi_{k+1} = S_k q_k`, `B = sigma_t + Omega . grad - K`.
//! Dividing by `S_{k+1}` gives the stencil in the original variable:
//! `(S_{k+1} psi_{k+1} - S_k psi_k) / (S_{k+1} dtau_k) + B psi_{k+1} - (S_k / S_{k+1}) q_k`.

use crate::error::{Error, Result};
use crate::field::{Field, TransformedField};
use crate::transport::solver::{Sense, TransportProblem};

fn weighted_sq(problem: &TransportProblem, k: usize, r: &[f64]) -> f64 {
    let nv = problem.grid().n_voxels();
    let quad = problem.quadrature();
    let ck = problem.energy().weights()[k];
    let mut total = 0.0;
    for m in 0..quad.len() {
        let s: f64 = r[m * nv..(m + 1) * nv].iter().map(|x| x * x).sum();
        total += quad.weight(m) * s;
    }
    ck * total * problem.grid().cell_volume()
}

/// Weighted L2 norm of the stencil residual over all nodes, including the
/// initial condition `psi_0 = 0`.
pub fn pde_residual(problem: &TransportProblem, psi: &Field, q: &Field) -> Result<f64> {
    problem.check(psi)?;
    problem.check(q)?;
    let energy = problem.energy();
    let s = energy.s_nodes();
    let n = psi.shape().slice_len();
    // the initial slice is weighted like its neighbour so it is not discounted
    let mut total = weighted_sq(problem, 1, psi.slice(0));
    let mut bpsi = vec![0.0; n];
    let mut r = vec![0.0; n];
    for k in 0..energy.intervals() {
        let dtau = energy.tau_step(k);
        problem.apply_slice_operator(psi.slice(k + 1), 0.0, Sense::Forward, &mut bpsi);
        let (prev, next, src) = (psi.slice(k), psi.slice(k + 1), q.slice(k));
        let ratio = s[k] / s[k + 1];
        for i in 0..n {
            r[i] = (s[k + 1] * next[i] - s[k] * prev[i]) / (s[k + 1] * dtau) + bpsi[i] - ratio * src[i];
        }
        total += weighted_sq(problem, k + 1, &r);
    }
    Ok(total.sqrt())
}

/// Source for which `psi` solves the discrete problem exactly (apart from the
/// initial slice, which must be zero). The last node carries no equation and
/// gets a zero source.
pub fn stencil_source(problem: &TransportProblem, psi: &Field) -> Result<Field> {
    problem.check(psi)?;
    let energy = problem.energy();
    let s = energy.s_nodes();
    let n = psi.shape().slice_len();
    let mut q = Field::zeros(psi.shape());
    let mut bpsi = vec![0.0; n];
    for k in 0..energy.intervals() {
        let dtau = energy.tau_step(k);
        problem.apply_slice_operator(psi.slice(k + 1), 0.0, Sense::Forward, &mut bpsi);
        let (prev, next) = (psi.slice(k).to_vec(), psi.slice(k + 1));
        let lhs: Vec<f64> =
            (0..n).map(|i| (s[k + 1] * next[i] - s[k] * prev[i]) / (s[k + 1] * dtau) + bpsi[i]).collect();
        let dst = q.slice_mut(k);
        for i in 0..n {
            dst[i] = lhs[i] * s[k + 1] / s[k];
        }
    }
    Ok(q)
}

/// Residual of `d_tau phi = T phi + q~` in the remapped variable, weighted
/// by the plain steps `dtau_k`.
pub fn transformed_residual(
    problem: &TransportProblem,
    phi: &TransformedField,
    q_tilde: &TransformedField,
) -> Result<f64> {
    if phi.shape() != problem.shape() || q_tilde.shape() != problem.shape() || phi.tau != q_tilde.tau {
        return Err(Error::Shape("transformed fields do not match the problem".into()));
    }
    let nv = problem.grid().n_voxels();
    let quad = problem.quadrature();
    let n = phi.shape().slice_len();
    let mut bphi = vec![0.0; n];
    let mut total = 0.0;
    for k in 0..phi.tau.len() - 1 {
        let dtau = phi.tau[k + 1] - phi.tau[k];
        problem.apply_slice_operator(phi.slice(k + 1), 0.0, Sense::Forward, &mut bphi);
        let (prev, next, src) = (phi.slice(k), phi.slice(k + 1), q_tilde.slice(k));
        let mut acc = 0.0;
        for m in 0..quad.len() {
            let mut s = 0.0;
            for i in m * nv..(m + 1) * nv {
                let r = (next[i] - prev[i]) / dtau + bphi[i] - src[i];
                s += r * r;
            }
            acc += quad.weight(m) * s;
        }
        total += dtau * acc;
    }
    Ok((total * problem.grid().cell_volume()).sqrt())
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

    fn problem(tol: f64) -> TransportProblem {
        let grid = SpatialGrid::new(2, &[1.0, 1.0], &[6, 6]).unwrap();
        let quad = AngularQuadrature::build(2, 8).unwrap();
        let xs = CrossSections::uniform(2, 36, Material::new("m", 1.0, 0.4, KernelKind::HenyeyGreenstein { g: 0.5 }));
        let energy = EnergyMap::build(StoppingPower::linear(1.0, 1.0, 1.0), 1.0, 8).unwrap();
        TransportProblem::new(grid, quad, xs, energy, SolverSettings { tolerance: tol, max_iterations: 500 }).unwrap()
    }

    #[test]
    fn zero_fields_have_zero_residual() {
        let p = problem(1e-10);
        let z = Field::zeros(p.shape());
        assert_eq!(pde_residual(&p, &z, &z).unwrap(), 0.0);
    }

    #[test]
    fn solver_output_satisfies_its_stencil() {
        for tol in [1e-8, 1e-10] {
            let p = problem(tol);
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let q = Field::from_fn(p.shape(), |_, _, _| rng.gen_range(0.0..1.0));
            let psi = p.solve_forward(&q).unwrap();
            let res = pde_residual(&p, &psi, &q).unwrap();
            assert!(res <= 10.0 * tol * p.measure().norm(&q), "tol {tol}: residual {res}");
        }
    }

    #[test]
    fn manufactured_source_zeroes_the_residual() {
        let p = problem(1e-10);
        let nodes = p.energy().nodes().to_vec();
        let grid = p.grid().clone();
        let psi = Field::from_fn(p.shape(), |v, m, k| {
            let c = grid.center(v);
            nodes[k] * (1.0 + c[0] * c[1]) * (1.0 + 0.1 * m as f64)
        });
        let q = stencil_source(&p, &psi).unwrap();
        let res = pde_residual(&p, &psi, &q).unwrap();
        assert!(res <= 1e-12 * p.measure().norm(&q), "{res}");
    }

    #[test]
    fn transformed_residual_of_march_is_small() {
        let p = problem(1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let q = Field::from_fn(p.shape(), |_, _, _| rng.gen_range(0.0..1.0));
        let qt = p.transform_source(&q).unwrap();
        let phi = p.march_transformed(None, &qt).unwrap();
        assert!(transformed_residual(&p, &phi, &qt).unwrap() < 1e-10);
    }
}
