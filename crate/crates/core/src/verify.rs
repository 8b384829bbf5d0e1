//! Property suite behind the `verify` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::optimize::{evaluate, objective, ObjectiveConfig, ObjectiveKind};
use crate::physics::{CrossSections, EnergyMap, KernelKind, Material};
use crate::quadrature::gauss_legendre;
use crate::transport::{Sense, TransportProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("{:<28} {:>12} {:>12}  {}\n", "check", "value", "threshold", "result");
        for c in &self.checks {
            s.push_str(&format!(
                "{:<28} {:>12.4e} {:>12.4e}  {}  {}\n",
                c.name,
                c.value,
                c.threshold,
                if c.passed { "PASS" } else { "FAIL" },
                c.detail
            ));
        }
        s
    }
}

/// Settings of the property suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub pairs: usize,
    pub directions: usize,
    pub sources: usize,
    /// Refinement levels of the convergence studies, each doubling the cells and energy steps.
    pub levels: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { pairs: 3, directions: 3, sources: 3, levels: 3, seed: 7 }
    }
}

fn random_field(problem: &TransportProblem, rng: &mut ChaCha8Rng, lo: f64) -> Field {
    Field::from_fn(problem.shape(), |_, _, _| rng.gen_range(lo..1.0))
}

/// Worst `adjoint_identity_gap` over random pairs.
pub fn max_adjoint_gap(problem: &TransportProblem, pairs: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let w = random_field(problem, &mut rng, -1.0);
        let z = random_field(problem, &mut rng, -1.0);
        worst = worst.max(problem.adjoint_identity_gap(&w, &z)?);
    }
    Ok(worst)
}

/// Central differences of `J` against `<g, dq>`: for every random direction the
/// smallest relative error over a ladder of step sizes; returns the worst one.
pub fn gradient_check(
    problem: &TransportProblem,
    cfg: &ObjectiveConfig,
    q: &Field,
    directions: usize,
    seed: u64,
) -> Result<f64> {
    let mu = problem.measure();
    let eval = evaluate(problem, q, cfg, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = mu.norm(q).max(1.0);
    let j = |x: &Field| -> Result<f64> { objective(problem, &problem.solve_forward(x)?, x, cfg) };
    let mut worst: f64 = 0.0;
    for _ in 0..directions {
        let dq = random_field(problem, &mut rng, -1.0);
        let dq = dq.scaled(1.0 / mu.norm(&dq));
        let exact = mu.inner(&eval.gradient, &dq);
        let mut best = f64::INFINITY;
        for e in 1..=6 {
            let h = scale * 10f64.powi(-e);
            let fd = (j(&q.lincomb(1.0, &dq, h))? - j(&q.lincomb(1.0, &dq, -h))?) / (2.0 * h);
            let err = (fd - exact).abs() / exact.abs().max(f64::MIN_POSITIVE);
            best = best.min(err);
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

/// Largest `-min psi / max psi` over random non-negative sources (zero when
/// every solution is non-negative).
pub fn positivity_margin(problem: &TransportProblem, sources: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..sources {
        let q = random_field(problem, &mut rng, 0.0);
        let psi = problem.solve_forward(&q)?;
        let top = psi.max();
        if top > 0.0 {
            worst = worst.max(-psi.min() / top);
        }
    }
    Ok(worst)
}

/// Same physics on a grid and energy axis refined by `factor`; every voxel is
/// split into `factor^dims` copies of its material. With `collisionless` all
/// cross sections are zero.
pub fn refine_problem(problem: &TransportProblem, factor: usize, collisionless: bool) -> Result<TransportProblem> {
    if factor == 0 {
        return Err(Error::Config("refinement factor must be positive".into()));
    }
    let coarse = problem.grid();
    let grid = coarse.refined(factor);
    let dims = grid.dims();
    let xs = problem.cross_sections();
    let new_xs = if collisionless {
        CrossSections::uniform(dims, grid.n_voxels(), Material::new("void", 0.0, 0.0, KernelKind::Isotropic))
    } else {
        let map: Vec<usize> = (0..grid.n_voxels())
            .map(|v| {
                let ijk = grid.ijk(v);
                let c = [ijk[0] / factor, ijk[1] / factor, ijk[2] / factor];
                xs.voxel_material()[coarse.index(c)]
            })
            .collect();
        CrossSections::new(dims, xs.materials().to_vec(), map)?
    };
    let e = problem.energy();
    let energy = EnergyMap::build(e.stopping_power().clone(), e.eps_max(), e.intervals() * factor)?;
    TransportProblem::new(grid, problem.quadrature().clone(), new_xs, energy, *problem.settings())
}

/// Direction-independent source `(1 + eps) exp(-|x - c|^2 / (2 w^2))` centred
/// in the domain, `w` a quarter of the shortest side.
pub fn smooth_source_profile(problem: &TransportProblem) -> impl Fn(&[f64; 3], f64) -> f64 {
    let grid = problem.grid();
    let dims = grid.dims();
    let centre: Vec<f64> = grid.extent().iter().map(|e| 0.5 * e).collect();
    let w = 0.25 * grid.extent().iter().copied().fold(f64::INFINITY, f64::min);
    move |x: &[f64; 3], eps: f64| {
        let r2: f64 = (0..dims).map(|a| (x[a] - centre[a]).powi(2)).sum();
        (1.0 + eps) * (-r2 / (2.0 * w * w)).exp()
    }
}

pub fn sample_source<F: Fn(&[f64; 3], f64) -> f64>(problem: &TransportProblem, f: F) -> Field {
    let grid = problem.grid();
    let nodes = problem.energy().nodes();
    Field::from_fn(problem.shape(), |v, _, k| f(&grid.center(v), nodes[k]))
}

/// `psi(x, Omega, eps) = (1/S(eps)) int_0^eps q(x - Omega (r(eps) - r(s)), s) ds`
/// for `sigma = 0`, at every voxel centre and energy node.
pub fn collisionless_reference<F: Fn(&[f64; 3], f64) -> f64>(problem: &TransportProblem, q: F) -> Result<Field> {
    const PIECES: usize = 16;
    let grid = problem.grid();
    let quad = problem.quadrature();
    let map = problem.energy();
    let (gx, gw) = gauss_legendre(8);
    let mut psi = Field::zeros(problem.shape());
    let nv = grid.n_voxels();
    for k in 1..map.n_nodes() {
        let eps = map.nodes()[k];
        let r_eps = map.tau_nodes()[k];
        // quadrature points in s with their weights and path lengths
        let len = eps / PIECES as f64;
        let mut pts = Vec::with_capacity(PIECES * gx.len());
        for p in 0..PIECES {
            let mid = (p as f64 + 0.5) * len;
            for (x, w) in gx.iter().zip(&gw) {
                let s = mid + 0.5 * len * x;
                pts.push((s, 0.5 * len * w, r_eps - map.r(s)));
            }
        }
        let s_eps = map.s_nodes()[k];
        for m in 0..quad.len() {
            let omega = quad.direction(m);
            for v in 0..nv {
                let c = grid.center(v);
                let mut total = 0.0;
                for &(s, w, l) in &pts {
                    let mut x = [0.0; 3];
                    for a in 0..3 {
                        x[a] = c[a] - omega[a] * l;
                    }
                    if grid.contains(&x[..grid.dims()]) {
                        total += w * q(&x, s);
                    }
                }
                psi.set(v, m, k, total / s_eps);
            }
        }
    }
    Ok(psi)
}

/// Implicit marcher of `d_eps(S psi) + (sigma_t + Omega . grad - K) psi = q`
/// directly in `eps`:
/// `(S_{k+1} psi_{k+1} - S_k psi_k)/h + B psi_{k+1} = q_{k+1}`.
pub fn direct_march(problem: &TransportProblem, q: &Field) -> Result<Field> {
    problem.check(q)?;
    let e = problem.energy();
    let s = e.s_nodes();
    let h = e.step();
    let mut psi = Field::zeros(q.shape());
    for k in 0..e.intervals() {
        let prev = psi.slice(k).to_vec();
        let rhs: Vec<f64> = prev.iter().zip(q.slice(k + 1)).map(|(p, src)| s[k] * p / h + src).collect();
        let guess = prev.clone();
        problem.solve_slice(&rhs, s[k + 1] / h, Sense::Forward, &guess, psi.slice_mut(k + 1))?;
    }
    Ok(psi)
}

/// Errors over a refinement ladder and the observed orders between levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub cells: Vec<usize>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
}

impl ConvergenceStudy {
    fn from_errors(cells: Vec<usize>, errors: Vec<f64>) -> Self {
        let orders = errors
            .windows(2)
            .zip(cells.windows(2))
            .map(|(e, c)| (e[0] / e[1]).ln() / (c[1] as f64 / c[0] as f64).ln())
            .collect();
        Self { cells, errors, orders }
    }

    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Least-squares slope of `log e` against `-log h` over all levels.
    pub fn fitted_order(&self) -> f64 {
        let n = self.errors.len() as f64;
        let xs: Vec<f64> = self.cells.iter().map(|&c| (c as f64).ln()).collect();
        let ys: Vec<f64> = self.errors.iter().map(|e| -e.ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    }
}

fn ladder<F>(base: &TransportProblem, levels: usize, collisionless: bool, mut error: F) -> Result<ConvergenceStudy>
where
    F: FnMut(&TransportProblem) -> Result<f64>,
{
    if levels < 2 {
        return Err(Error::Config("a convergence study needs at least two levels".into()));
    }
    let mut cells = Vec::with_capacity(levels);
    let mut errors = Vec::with_capacity(levels);
    for l in 0..levels {
        let p = refine_problem(base, 1 << l, collisionless)?;
        cells.push(p.grid().cells()[0]);
        let e = error(&p)?;
        log::info!("level {l}: {} cells, {} steps, error {e:.4e}", p.grid().cells()[0], p.energy().intervals());
        errors.push(e);
    }
    Ok(ConvergenceStudy::from_errors(cells, errors))
}

/// `sigma = 0` forward solves against the characteristic integral.
pub fn collisionless_study(base: &TransportProblem, levels: usize) -> Result<ConvergenceStudy> {
    ladder(base, levels, true, |p| {
        let profile = smooth_source_profile(p);
        let q = sample_source(p, &profile);
        let psi = p.solve_forward(&q)?;
        let exact = collisionless_reference(p, &profile)?;
        Ok(p.measure().distance(&psi, &exact))
    })
}

/// r-transform solution against `direct_march`.
pub fn transformation_study(base: &TransportProblem, levels: usize) -> Result<ConvergenceStudy> {
    ladder(base, levels, false, |p| {
        let q = sample_source(p, smooth_source_profile(p));
        let a = p.solve_forward(&q)?;
        let b = direct_march(p, &q)?;
        Ok(p.measure().distance(&a, &b))
    })
}

/// Objective used by the gradient check when the configuration has none.
pub fn synthetic_objective(problem: &TransportProblem, seed: u64) -> Result<ObjectiveConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi_bar = problem.solve_forward(&random_field(problem, &mut rng, -1.0))?;
    let q_bar = random_field(problem, &mut rng, 0.0);
    let n = problem.grid().n_voxels();
    ObjectiveConfig::new(ObjectiveKind::AngleAveraged, vec![1.0; n], 0.1, psi_bar, q_bar)
}

fn study_detail(what: &str, s: &ConvergenceStudy) -> String {
    let errs: Vec<String> = s.errors.iter().map(|x| format!("{x:.3e}")).collect();
    let orders: Vec<String> = s.orders.iter().map(|x| format!("{x:.3}")).collect();
    format!("{what} {} (pairwise orders {})", errs.join(" "), orders.join(" "))
}

pub fn run_verify(
    problem: &TransportProblem,
    cfg: Option<&ObjectiveConfig>,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    let mut push = |name, value: f64, threshold: f64, passed: bool, detail: String| {
        log::info!("{name}: {value:.4e}");
        report.checks.push(CheckOutcome { name, value, threshold, passed, detail });
    };

    let scatter = problem.cross_sections().has_scattering();
    let gap_tol = if scatter { 1e-10 } else { 1e-12 };
    let gap = max_adjoint_gap(problem, opts.pairs, opts.seed)?;
    push("adjoint identity gap", gap, gap_tol, gap <= gap_tol, format!("{} pairs", opts.pairs));

    let synthetic;
    let obj = match cfg {
        Some(c) => c,
        None => {
            synthetic = synthetic_objective(problem, opts.seed)?;
            &synthetic
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37);
    let q = random_field(problem, &mut rng, 0.0);
    let g = gradient_check(problem, obj, &q, opts.directions, opts.seed)?;
    push("gradient check", g, 1e-6, g <= 1e-6, format!("{} directions", opts.directions));

    let c = collisionless_study(problem, opts.levels)?;
    let order = c.fitted_order();
    push("collisionless convergence", order, 0.9, order >= 0.9, study_detail("errors", &c));

    let pos = positivity_margin(problem, opts.sources, opts.seed)?;
    push("positivity", -pos, -1e-13, pos <= 1e-13, format!("{} sources", opts.sources));

    let t = transformation_study(problem, opts.levels)?;
    let order = t.fitted_order();
    push("transformation equivalence", order, 0.9, order >= 0.9, study_detail("differences", &t));
    Ok(report)
}
