use crate::error::{Error, Result};
use crate::field::{AdjointField, Field, FieldShape};
use crate::geometry::{Region, RegionMask};
use crate::transport::TransportProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// Tracks the angular integral `int (psi - psi_bar) dOmega`.
    AngleAveraged,
    /// Tracks `psi - psi_bar` pointwise in angle.
    FullField,
}

#[derive(Debug, Clone)]
pub struct ObjectiveConfig {
    pub kind: ObjectiveKind,
    /// Tracking weight per voxel.
    pub alpha1: Vec<f64>,
    /// Control weight.
    pub alpha2: f64,
    pub psi_bar: Field,
    pub q_bar: Field,
}

impl ObjectiveConfig {
    pub fn new(kind: ObjectiveKind, alpha1: Vec<f64>, alpha2: f64, psi_bar: Field, q_bar: Field) -> Result<Self> {
        let cfg = Self { kind, alpha1, alpha2, psi_bar, q_bar };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((v, a)) = self.alpha1.iter().enumerate().find(|(_, a)| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::ConfigKey {
                key: "objective.alpha".into(),
                message: format!("alpha1 = {a} at voxel {v}"),
            });
        }
        if !(self.alpha2.is_finite() && self.alpha2 > 0.0) {
            return Err(Error::ConfigKey {
                key: "objective.alpha2".into(),
                message: format!("must be positive, got {}", self.alpha2),
            });
        }
        if self.q_bar.data().iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::ConfigKey {
                key: "objective.q_bar".into(),
                message: "must be finite and non-negative".into(),
            });
        }
        if !self.psi_bar.is_finite() {
            return Err(Error::ConfigKey {
                key: "objective.target".into(),
                message: "target fluence must be finite".into(),
            });
        }
        self.psi_bar.check_shape(&self.q_bar)?;
        if self.alpha1.len() != self.q_bar.shape().voxels {
            return Err(Error::Shape(format!(
                "{} tracking weights for {} voxels",
                self.alpha1.len(),
                self.q_bar.shape().voxels
            )));
        }
        Ok(())
    }

    fn check(&self, problem: &TransportProblem) -> Result<()> {
        problem.check(&self.psi_bar)?;
        problem.check(&self.q_bar)
    }

    fn tracking_off(&self) -> bool {
        self.alpha1.iter().all(|&a| a == 0.0)
    }
}

/// Per-voxel tracking weights from the tumour / normal / risk weights.
pub fn alpha1_from_regions(mask: &RegionMask, weights: [f64; 3]) -> Vec<f64> {
    mask.labels()
        .iter()
        .map(|r| match r {
            Region::Tumor => weights[0],
            Region::Normal => weights[1],
            Region::Risk => weights[2],
        })
        .collect()
}

/// Isotropic field whose angular integral at `(v, k)` is `mean(v, k)`.
pub fn isotropic_target<F: Fn(usize, usize) -> f64>(shape: FieldShape, sphere: f64, mean: F) -> Field {
    Field::from_fn(shape, |v, _, k| mean(v, k) / sphere)
}

/// `Phi(psi)(v, k) = sum_m w_m (psi - psi_bar)`, laid out as `k * V + v`.
pub fn angular_mean_residual(problem: &TransportProblem, psi: &Field, cfg: &ObjectiveConfig) -> Result<Vec<f64>> {
    problem.check(psi)?;
    cfg.check(problem)?;
    let s = psi.shape();
    let w = problem.quadrature().weights();
    let mut out = vec![0.0; s.voxels * s.nodes];
    for k in 0..s.nodes {
        let row = &mut out[k * s.voxels..(k + 1) * s.voxels];
        for (m, &wm) in w.iter().enumerate() {
            for (v, r) in row.iter_mut().enumerate() {
                *r += wm * (psi.get(v, m, k) - cfg.psi_bar.get(v, m, k));
            }
        }
    }
    Ok(out)
}

/// Value of the tracking functional.
pub fn objective(problem: &TransportProblem, psi: &Field, q: &Field, cfg: &ObjectiveConfig) -> Result<f64> {
    problem.check(q)?;
    let mu = problem.measure();
    let vol = mu.cell_volume;
    let tracking = match cfg.kind {
        ObjectiveKind::AngleAveraged => {
            let phi = angular_mean_residual(problem, psi, cfg)?;
            let nv = psi.shape().voxels;
            let mut total = 0.0;
            for (k, &ck) in mu.energy.iter().enumerate() {
                let s: f64 = phi[k * nv..(k + 1) * nv].iter().zip(&cfg.alpha1).map(|(p, a)| a * p * p).sum();
                total += ck * s;
            }
            0.5 * vol * total
        }
        ObjectiveKind::FullField => {
            problem.check(psi)?;
            cfg.check(problem)?;
            let weighted = Field::from_fn(psi.shape(), |v, m, k| {
                cfg.alpha1[v].sqrt() * (psi.get(v, m, k) - cfg.psi_bar.get(v, m, k))
            });
            0.5 * mu.inner(&weighted, &weighted)
        }
    };
    let dq = q.lincomb(1.0, &cfg.q_bar, -1.0);
    Ok(tracking + 0.5 * cfg.alpha2 * mu.inner(&dq, &dq))
}

/// State, adjoint, objective and gradient at one control.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub psi: Field,
    pub lambda: AdjointField,
    pub objective: f64,
    pub gradient: Field,
}

fn adjoint_source(problem: &TransportProblem, psi: &Field, cfg: &ObjectiveConfig) -> Result<Field> {
    match cfg.kind {
        ObjectiveKind::AngleAveraged => {
            let phi = angular_mean_residual(problem, psi, cfg)?;
            let nv = psi.shape().voxels;
            Ok(Field::from_fn(psi.shape(), |v, _, k| cfg.alpha1[v] * phi[k * nv + v]))
        }
        ObjectiveKind::FullField => {
            Ok(Field::from_fn(psi.shape(), |v, m, k| cfg.alpha1[v] * (psi.get(v, m, k) - cfg.psi_bar.get(v, m, k))))
        }
    }
}

/// Evaluate everything at `q`, reusing `psi` when the caller already has `X(q)`.
pub fn evaluate(
    problem: &TransportProblem,
    q: &Field,
    cfg: &ObjectiveConfig,
    psi: Option<Field>,
) -> Result<Evaluation> {
    cfg.check(problem)?;
    let psi = match psi {
        Some(p) => p,
        None => problem.solve_forward(q)?,
    };
    let lambda = if cfg.tracking_off() {
        AdjointField(Field::zeros(q.shape()))
    } else {
        problem.solve_adjoint(&adjoint_source(problem, &psi, cfg)?)?
    };
    let objective = objective(problem, &psi, q, cfg)?;
    let gradient = lambda.lincomb(1.0, &q.lincomb(1.0, &cfg.q_bar, -1.0), cfg.alpha2);
    Ok(Evaluation { psi, lambda, objective, gradient })
}

/// `g = lambda + alpha2 (q - q_bar)` with `lambda = X^*(alpha1 Phi(X q))`.
pub fn gradient(problem: &TransportProblem, q: &Field, cfg: &ObjectiveConfig) -> Result<Field> {
    problem.check(q)?;
    if cfg.tracking_off() {
        cfg.check(problem)?;
        return Ok(q.lincomb(cfg.alpha2, &cfg.q_bar, -cfg.alpha2));
    }
    Ok(evaluate(problem, q, cfg, None)?.gradient)
}

/// Pointwise `max(q, 0)`.
pub fn project_admissible(q: &Field) -> Field {
    q.map(|x| if x > 0.0 { x } else { 0.0 })
}

/// `|q - (q - lambda - alpha2 (q - q_bar))^+| / max(|q|, 1)` in the weighted norm.
pub fn kkt_residual(problem: &TransportProblem, q: &Field, lambda: &Field, cfg: &ObjectiveConfig) -> Result<f64> {
    problem.check(q)?;
    problem.check(lambda)?;
    cfg.check(problem)?;
    let a2 = cfg.alpha2;
    let mut fixed = q.clone();
    for ((x, (&qi, &li)), &qb) in
        fixed.data_mut().iter_mut().zip(q.data().iter().zip(lambda.data())).zip(cfg.q_bar.data())
    {
        let y = qi - li - a2 * (qi - qb);
        *x = qi - if y > 0.0 { y } else { 0.0 };
    }
    let mu = problem.measure();
    Ok(mu.norm(&fixed) / mu.norm(q).max(1.0))
}
