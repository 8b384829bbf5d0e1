use crate::error::{Error, Result};
use crate::field::{AdjointField, Field};
use crate::optimize::objective::{evaluate, kkt_residual, objective, project_admissible, ObjectiveConfig};
use crate::transport::TransportProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    /// Stop once the KKT residual falls to this value.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_step: f64,
    pub backtrack: f64,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    pub min_step: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { tolerance: 1e-6, max_iterations: 2000, initial_step: 1.0, backtrack: 0.5, armijo: 1e-4, min_step: 1e-12 }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| Err(Error::ConfigKey { key: format!("optimizer.{key}"), message });
        if !(self.tolerance > 0.0) {
            return bad("tolerance", format!("must be positive, got {}", self.tolerance));
        }
        if !(self.initial_step > 0.0) {
            return bad("initial_step", format!("must be positive, got {}", self.initial_step));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack", format!("must lie in (0, 1), got {}", self.backtrack));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo", format!("must lie in (0, 1), got {}", self.armijo));
        }
        if !(self.min_step > 0.0 && self.min_step <= self.initial_step) {
            return bad("min_step", format!("must lie in (0, initial_step], got {}", self.min_step));
        }
        Ok(())
    }
}

/// One row of the optimizer history. `step` is the step that produced this iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub kkt: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct OptState {
    pub q: Field,
    pub psi: Field,
    pub lambda: AdjointField,
    pub objective: f64,
    pub grad_norm: f64,
    pub kkt: f64,
    pub iteration: usize,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub state: OptState,
    pub history: Vec<HistoryEntry>,
    pub converged: bool,
}

/// Projected gradient `q <- (q - gamma g)^+` with Armijo backtracking on `J`.
pub fn optimize_projected_gradient(
    problem: &TransportProblem,
    cfg: &ObjectiveConfig,
    q0: &Field,
    settings: &OptimizerSettings,
) -> Result<OptResult> {
    settings.validate()?;
    cfg.validate()?;
    problem.check(q0)?;
    if let Some(x) = q0.data().iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::Domain(format!("initial control must be non-negative (found {x})")));
    }
    let mu = problem.measure();
    let mut q = q0.clone();
    let mut psi = None;
    let mut step = 0.0;
    let mut history = Vec::new();
    let mut iteration = 0;
    loop {
        let eval = evaluate(problem, &q, cfg, psi.take())?;
        let kkt = kkt_residual(problem, &q, &eval.lambda, cfg)?;
        let grad_norm = mu.norm(&eval.gradient);
        history.push(HistoryEntry { iteration, objective: eval.objective, grad_norm, kkt, step });
        log::info!("iter {iteration:4}  J = {:.6e}  |g| = {grad_norm:.3e}  kkt = {kkt:.3e}", eval.objective);

        let converged = kkt <= settings.tolerance;
        if converged || iteration >= settings.max_iterations {
            let state = OptState {
                q,
                psi: eval.psi,
                lambda: eval.lambda,
                objective: eval.objective,
                grad_norm,
                kkt,
                iteration,
                step,
            };
            return Ok(OptResult { state, history, converged });
        }

        let mut gamma = settings.initial_step;
        loop {
            let trial = project_admissible(&q.lincomb(1.0, &eval.gradient, -gamma));
            let trial_psi = problem.solve_forward(&trial)?;
            let trial_j = objective(problem, &trial_psi, &trial, cfg)?;
            let decrease = mu.inner(&eval.gradient, &trial.lincomb(1.0, &q, -1.0));
            if trial_j <= eval.objective + settings.armijo * decrease {
                q = trial;
                psi = Some(trial_psi);
                step = gamma;
                break;
            }
            gamma *= settings.backtrack;
            if gamma < settings.min_step {
                return Err(Error::LineSearch { iteration, step: gamma, objective: eval.objective });
            }
        }
        iteration += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldShape;
    use crate::geometry::SpatialGrid;
    use crate::optimize::objective::ObjectiveKind;
    use crate::physics::{CrossSections, EnergyMap, KernelKind, Material, StoppingPower};
    use crate::quadrature::AngularQuadrature;
    use crate::transport::SolverSettings;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem() -> TransportProblem {
        let grid = SpatialGrid::new(2, &[1.0, 1.0], &[4, 4]).unwrap();
        let quad = AngularQuadrature::build(2, 4).unwrap();
        let xs = CrossSections::uniform(2, 16, Material::new("m", 1.0, 0.4, KernelKind::Isotropic));
        let energy = EnergyMap::build(StoppingPower::linear(1.0, 1.0, 1.0), 1.0, 4).unwrap();
        TransportProblem::new(grid, quad, xs, energy, SolverSettings { tolerance: 1e-13, max_iterations: 500 }).unwrap()
    }

    fn random(shape: FieldShape, seed: u64, lo: f64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field::from_fn(shape, |_, _, _| rng.gen_range(lo..1.0))
    }

    #[test]
    fn settings_validation() {
        assert!(OptimizerSettings::default().validate().is_ok());
        assert!(OptimizerSettings { backtrack: 1.0, ..Default::default() }.validate().is_err());
        assert!(OptimizerSettings { tolerance: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn rejects_infeasible_start() {
        let p = problem();
        let s = p.shape();
        let cfg =
            ObjectiveConfig::new(ObjectiveKind::AngleAveraged, vec![1.0; 16], 1.0, Field::zeros(s), Field::zeros(s))
                .unwrap();
        let q0 = Field::constant(s, -1.0);
        assert!(optimize_projected_gradient(&p, &cfg, &q0, &OptimizerSettings::default()).is_err());
    }

    #[test]
    fn control_only_converges_to_target() {
        let p = problem();
        let s = p.shape();
        let qb = random(s, 1, 0.0);
        let cfg = ObjectiveConfig::new(ObjectiveKind::AngleAveraged, vec![0.0; 16], 1.0, Field::zeros(s), qb.clone())
            .unwrap();
        let settings = OptimizerSettings { tolerance: 1e-10, ..Default::default() };
        let res = optimize_projected_gradient(&p, &cfg, &Field::zeros(s), &settings).unwrap();
        assert!(res.converged);
        assert!(res.state.kkt <= 1e-10);
        assert!(p.measure().distance(&res.state.q, &qb) < 1e-9);
    }

    #[test]
    fn descent_and_feasibility() {
        let p = problem();
        let s = p.shape();
        // target from a signed source so the bound is active somewhere
        let signed = random(s, 2, -1.0);
        let psi_bar = p.solve_forward(&signed).unwrap();
        let cfg =
            ObjectiveConfig::new(ObjectiveKind::AngleAveraged, vec![1.0; 16], 0.1, psi_bar, Field::zeros(s)).unwrap();
        let settings = OptimizerSettings { tolerance: 1e-8, max_iterations: 3000, ..Default::default() };
        let res = optimize_projected_gradient(&p, &cfg, &Field::zeros(s), &settings).unwrap();
        assert!(res.converged, "kkt {}", res.state.kkt);
        assert!(res.state.q.min() >= 0.0);
        for w in res.history.windows(2) {
            assert!(w[1].objective <= w[0].objective);
        }
        assert_eq!(res.history.len(), res.state.iteration + 1);
    }

    #[test]
    fn large_control_weight_stays_near_target() {
        let p = problem();
        let s = p.shape();
        let qb = random(s, 3, 0.2);
        let psi_bar = Field::zeros(s);
        let alpha2 = 1e3;
        let cfg =
            ObjectiveConfig::new(ObjectiveKind::AngleAveraged, vec![1.0; 16], alpha2, psi_bar, qb.clone()).unwrap();
        let settings =
            OptimizerSettings { tolerance: 1e-10, initial_step: 1e-3, min_step: 1e-15, ..Default::default() };
        let res = optimize_projected_gradient(&p, &cfg, &qb, &settings).unwrap();
        assert!(res.converged);
        let lam_bar = crate::optimize::objective::evaluate(&p, &qb, &cfg, None).unwrap().lambda;
        let mu = p.measure();
        assert!(mu.distance(&res.state.q, &qb) <= mu.norm(&lam_bar) / alpha2);
    }

    #[test]
    fn empty_run_keeps_initial_history_row() {
        let p = problem();
        let s = p.shape();
        let cfg =
            ObjectiveConfig::new(ObjectiveKind::AngleAveraged, vec![1.0; 16], 1.0, Field::zeros(s), Field::zeros(s))
                .unwrap();
        let settings = OptimizerSettings { max_iterations: 0, ..Default::default() };
        let res = optimize_projected_gradient(&p, &cfg, &Field::zeros(s), &settings).unwrap();
        assert_eq!(res.history.len(), 1);
        assert!(res.converged);
        assert_eq!(res.history[0].objective, 0.0);
    }
}
