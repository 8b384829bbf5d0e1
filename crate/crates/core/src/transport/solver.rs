use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Field, FieldShape, Measure, TransformedField};
use crate::geometry::SpatialGrid;
use crate::physics::{CrossSections, EnergyMap};
use crate::quadrature::AngularQuadrature;
use crate::transport::scatter::ScatteringOperator;
use crate::transport::sweep::{apply_streaming, sweep_one_direction, Inflow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative L2 change between source iterates at which to stop.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 500 }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::Config(format!(
                "solver tolerance must be positive and max_iterations >= 1 (got {}, {})",
                self.tolerance, self.max_iterations
            )));
        }
        Ok(())
    }
}

/// Streaming sense of a sweep: the adjoint streams along `-Omega`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Forward,
    Adjoint,
}

/// Everything needed to apply the discrete control-to-state map and its adjoint.
#[derive(Debug, Clone)]
pub struct TransportProblem {
    grid: SpatialGrid,
    quad: AngularQuadrature,
    xs: CrossSections,
    energy: EnergyMap,
    settings: SolverSettings,
    sigma_t: Vec<f64>,
    scatter: ScatteringOperator,
}

impl TransportProblem {
    pub fn new(
        grid: SpatialGrid,
        quad: AngularQuadrature,
        xs: CrossSections,
        energy: EnergyMap,
        settings: SolverSettings,
    ) -> Result<Self> {
        settings.validate()?;
        if grid.dims() != quad.dims() || grid.dims() != xs.dims() {
            return Err(Error::Config(format!(
                "dimension mismatch: grid {}, quadrature {}, cross sections {}",
                grid.dims(),
                quad.dims(),
                xs.dims()
            )));
        }
        if xs.n_voxels() != grid.n_voxels() {
            return Err(Error::Config(format!(
                "cross sections cover {} voxels, grid has {}",
                xs.n_voxels(),
                grid.n_voxels()
            )));
        }
        let scatter = ScatteringOperator::new(&xs, &quad)?;
        let sigma_t = xs.sigma_t_field();
        Ok(Self { grid, quad, xs, energy, settings, sigma_t, scatter })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn quadrature(&self) -> &AngularQuadrature {
        &self.quad
    }

    pub fn cross_sections(&self) -> &CrossSections {
        &self.xs
    }

    pub fn energy(&self) -> &EnergyMap {
        &self.energy
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn with_settings(&self, settings: SolverSettings) -> Self {
        Self { settings, ..self.clone() }
    }

    pub fn sigma_t(&self) -> &[f64] {
        &self.sigma_t
    }

    pub fn scattering(&self) -> &ScatteringOperator {
        &self.scatter
    }

    pub fn shape(&self) -> FieldShape {
        FieldShape::new(self.grid.n_voxels(), self.quad.len(), self.energy.n_nodes())
    }

    /// Weights of the phase-space pairing on the energy nodes.
    pub fn measure(&self) -> Measure {
        Measure {
            cell_volume: self.grid.cell_volume(),
            angular: self.quad.weights().to_vec(),
            energy: self.energy.weights().to_vec(),
        }
    }

    pub fn check(&self, f: &Field) -> Result<()> {
        if f.shape() != self.shape() {
            return Err(Error::Shape(format!("field {:?} does not match problem {:?}", f.shape(), self.shape())));
        }
        Ok(())
    }

    fn direction(&self, m: usize, sense: Sense) -> [f64; 3] {
        let d = self.quad.direction(m);
        match sense {
            Sense::Forward => d,
            Sense::Adjoint => [-d[0], -d[1], -d[2]],
        }
    }

    /// Solve `(inv_dt + sigma_t +- Omega . grad - K) u = rhs` on one energy
    /// slice by source iteration (lagged `K`). Returns the iteration count.
    pub fn solve_slice(&self, rhs: &[f64], inv_dt: f64, sense: Sense, guess: &[f64], out: &mut [f64]) -> Result<usize> {
        let nv = self.grid.n_voxels();
        let sweep_all = |src: &[f64], dst: &mut [f64]| {
            dst.par_chunks_mut(nv).enumerate().for_each(|(m, u)| {
                let omega = self.direction(m, sense);
                sweep_one_direction(
                    &self.grid,
                    &self.sigma_t,
                    omega,
                    &src[m * nv..(m + 1) * nv],
                    &Inflow::Vacuum,
                    inv_dt,
                    u,
                );
            });
        };
        if !self.scatter.is_active() {
            sweep_all(rhs, out);
            return Ok(1);
        }
        let mut current = guess.to_vec();
        let mut src = vec![0.0; rhs.len()];
        let mut change = f64::INFINITY;
        for it in 1..=self.settings.max_iterations {
            self.scatter.apply(&current, &mut src);
            src.iter_mut().zip(rhs).for_each(|(s, r)| *s += r);
            sweep_all(&src, out);
            let (mut diff, mut norm) = (0.0, 0.0);
            for m in 0..self.quad.len() {
                let w = self.quad.weight(m);
                let (mut d, mut n) = (0.0, 0.0);
                for v in m * nv..(m + 1) * nv {
                    let e = out[v] - current[v];
                    d += e * e;
                    n += out[v] * out[v];
                }
                diff += w * d;
                norm += w * n;
            }
            change = if norm > 0.0 { (diff / norm).sqrt() } else { 0.0 };
            current.copy_from_slice(out);
            if change <= self.settings.tolerance {
                return Ok(it);
            }
        }
        Err(Error::NonConvergence { iterations: self.settings.max_iterations, residual: change })
    }

    /// `out = (inv_dt + sigma_t +- Omega . grad - K) u` on one slice; the
    /// operator `solve_slice` inverts.
    pub fn apply_slice_operator(&self, u: &[f64], inv_dt: f64, sense: Sense, out: &mut [f64]) {
        let nv = self.grid.n_voxels();
        let mut ku = vec![0.0; u.len()];
        if self.scatter.is_active() {
            self.scatter.apply(u, &mut ku);
        }
        out.par_chunks_mut(nv).enumerate().for_each(|(m, o)| {
            let omega = self.direction(m, sense);
            apply_streaming(&self.grid, &self.sigma_t, omega, &u[m * nv..(m + 1) * nv], inv_dt, o);
            o.iter_mut().zip(&ku[m * nv..(m + 1) * nv]).for_each(|(x, k)| *x -= k);
        });
    }

    /// One implicit step `(I/dt - A + Sigma - K) phi_next = phi_prev/dt + source`.
    pub fn step_energy(&self, phi_prev: &[f64], source: &[f64], dt: f64) -> Result<Vec<f64>> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("energy step must be positive, got {dt}")));
        }
        let inv_dt = 1.0 / dt;
        let rhs: Vec<f64> = phi_prev.iter().zip(source).map(|(p, s)| p * inv_dt + s).collect();
        let mut out = vec![0.0; rhs.len()];
        self.solve_slice(&rhs, inv_dt, Sense::Forward, phi_prev, &mut out)?;
        Ok(out)
    }

    /// `q~(tau_k) = S(eps_k) q(eps_k)` on the remapped nodes `tau_k = r(eps_k)`.
    pub fn transform_source(&self, q: &Field) -> Result<TransformedField> {
        self.check(q)?;
        let mut field = q.clone();
        for (k, &s) in self.energy.s_nodes().iter().enumerate() {
            field.slice_mut(k).iter_mut().for_each(|x| *x *= s);
        }
        Ok(TransformedField { field, tau: self.energy.tau_nodes().to_vec() })
    }

    /// `psi(eps_k) = phi(r(eps_k)) / S(eps_k)`, interpolating linearly in `tau`
    /// when `r(eps_k)` falls between the field's nodes.
    pub fn untransform_state(&self, phi: &TransformedField) -> Result<Field> {
        let shape = self.shape();
        if phi.shape().voxels != shape.voxels || phi.shape().directions != shape.directions {
            return Err(Error::Shape(format!("transformed field {:?} vs problem {:?}", phi.shape(), shape)));
        }
        if phi.tau.len() != phi.shape().nodes || phi.tau.len() < 2 {
            return Err(Error::Shape("transformed field needs one tau value per node (at least two)".into()));
        }
        let mut psi = Field::zeros(shape);
        let tau = &phi.tau;
        let n = tau.len();
        let scale = tau[n - 1].abs().max(1.0);
        for k in 0..shape.nodes {
            let target = self.energy.tau_nodes()[k];
            let s = self.energy.s_nodes()[k];
            let i = tau.partition_point(|&t| t <= target).clamp(1, n - 1) - 1;
            let mut t = (target - tau[i]) / (tau[i + 1] - tau[i]);
            if t.abs() < 1e-12 * scale {
                t = 0.0;
            } else if (1.0 - t).abs() < 1e-12 * scale {
                t = 1.0;
            }
            let t = t.clamp(0.0, 1.0);
            let (a, b) = (phi.slice(i), phi.slice(i + 1));
            let dst = psi.slice_mut(k);
            for j in 0..dst.len() {
                dst[j] = ((1.0 - t) * a[j] + t * b[j]) / s;
            }
        }
        Ok(psi)
    }

    /// The `S = 1` solution operator on the remapped axis: march
    /// `d_tau phi = T phi + q~` from `phi(0) = initial` (zero when `None`).
    ///
    /// Step `k -> k+1` uses the source at the left node `tau_k`.
    pub fn march_transformed(&self, initial: Option<&[f64]>, q_tilde: &TransformedField) -> Result<TransformedField> {
        let shape = self.shape();
        if q_tilde.shape() != shape {
            return Err(Error::Shape(format!("transformed source {:?} vs problem {:?}", q_tilde.shape(), shape)));
        }
        let mut phi = Field::zeros(shape);
        if let Some(init) = initial {
            if init.len() != shape.slice_len() {
                return Err(Error::Shape("initial slice has the wrong length".into()));
            }
            phi.slice_mut(0).copy_from_slice(init);
        }
        let mut total_iters = 0;
        for k in 0..self.energy.intervals() {
            let dt = q_tilde.tau[k + 1] - q_tilde.tau[k];
            let inv_dt = 1.0 / dt;
            let prev = phi.slice(k).to_vec();
            let rhs: Vec<f64> = prev.iter().zip(q_tilde.slice(k)).map(|(p, s)| p * inv_dt + s).collect();
            let next = phi.slice_mut(k + 1);
            total_iters += self.solve_slice(&rhs, inv_dt, Sense::Forward, &prev, next)?;
        }
        log::debug!("forward march: {total_iters} sweeps over {} steps", self.energy.intervals());
        Ok(TransformedField { field: phi, tau: q_tilde.tau.clone() })
    }

    /// Control-to-state map: `psi = X(q)` with zero initial data and vacuum inflow.
    pub fn solve_forward(&self, q: &Field) -> Result<Field> {
        let q_tilde = self.transform_source(q)?;
        let phi = self.march_transformed(None, &q_tilde)?;
        self.untransform_state(&phi)
    }

    /// Forward solve started from a nonzero fluence `psi0` at `eps = 0`.
    #[doc(hidden)]
    pub fn solve_forward_from(&self, psi0: &[f64], q: &Field) -> Result<Field> {
        let s0 = self.energy.s_nodes()[0];
        let phi0: Vec<f64> = psi0.iter().map(|x| x * s0).collect();
        let q_tilde = self.transform_source(q)?;
        let phi = self.march_transformed(Some(&phi0), &q_tilde)?;
        self.untransform_state(&phi)
    }
}
