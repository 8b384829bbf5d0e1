//! TOML run configuration.
//!
//! Every section is documented in the README; relative paths are resolved
//! against the directory of the configuration file. Loading builds the
//! transport problem and runs the A1-A4 gate before anything is solved.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{Region, RegionMask, SpatialGrid};
use crate::io::formats::read_field;
use crate::io::phantom::{load_phantom, Phantom};
use crate::optimize::{alpha1_from_regions, isotropic_target, ObjectiveConfig, ObjectiveKind, OptimizerSettings};
use crate::physics::{
    validate_assumptions, AssumptionReport, CrossSections, EnergyMap, KernelKind, Material, MollerParams, StoppingPower,
};
use crate::quadrature::{sphere_measure, AngularQuadrature};
use crate::transport::{SolverSettings, TransportProblem};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub grid: GridSpec,
    pub quadrature: QuadratureSpec,
    pub energy: EnergySpec,
    pub materials: Vec<MaterialSpec>,
    pub phantom: PhantomSpec,
    #[serde(default)]
    pub physics: PhysicsSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    pub source: Option<SourceSpec>,
    pub objective: Option<ObjectiveSpec>,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub report: ReportSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dims: usize,
    pub extent: Vec<f64>,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub order: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySpec {
    pub eps_max: f64,
    /// Number of energy steps; the grid has `intervals + 1` nodes.
    pub intervals: usize,
    pub stopping_power: StoppingSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StoppingSpec {
    Constant { value: f64 },
    Tabulated { energies: Vec<f64>, values: Vec<f64> },
    Moller { density: f64, binding_energy: f64, electron_radius: f64, reference_energy: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    Isotropic,
    HenyeyGreenstein,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub name: String,
    pub sigma_t: f64,
    pub sigma_s: f64,
    pub kernel: KernelSpec,
    /// Anisotropy, used by `henyey_greenstein` only.
    #[serde(default)]
    pub g: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub path: Option<PathBuf>,
    /// Material name filling the grid when no file is given.
    pub material: Option<String>,
    /// Region label (`T`, `N` or `R`) for a uniform phantom.
    pub region: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSpec {
    #[serde(default)]
    pub allow_supercritical: bool,
    #[serde(default = "default_a3_bound")]
    pub a3_bound: f64,
}

fn default_a3_bound() -> f64 {
    1e3
}

impl Default for PhysicsSpec {
    fn default() -> Self {
        Self { allow_supercritical: false, a3_bound: default_a3_bound() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_solver_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_solver_iterations")]
    pub max_iterations: usize,
}

fn default_solver_tolerance() -> f64 {
    SolverSettings::default().tolerance
}

fn default_solver_iterations() -> usize {
    SolverSettings::default().max_iterations
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { tolerance: default_solver_tolerance(), max_iterations: default_solver_iterations() }
    }
}

/// A non-negative, direction-independent field over the phase space.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`, optionally restricted to one region.
    Gaussian {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
        region: Option<String>,
    },
    /// Independent uniform values in `[0, scale)`.
    Random {
        seed: u64,
        scale: f64,
    },
    /// Field text file.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKindSpec {
    #[default]
    AngleAveraged,
    FullField,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionValues {
    pub tumor: f64,
    pub normal: f64,
    pub risk: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// Isotropic target whose angular integral is constant per region.
    Regions {
        tumor: f64,
        normal: f64,
        risk: f64,
    },
    /// Target produced by the forward solve of `q_bar`.
    ExactRecovery,
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    #[serde(default)]
    pub kind: ObjectiveKindSpec,
    pub alpha: RegionValues,
    pub alpha2: f64,
    pub target: TargetSpec,
    #[serde(default)]
    pub q_bar: SourceSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    #[serde(default = "d_tol")]
    pub tolerance: f64,
    #[serde(default = "d_iters")]
    pub max_iterations: usize,
    #[serde(default = "d_step")]
    pub initial_step: f64,
    #[serde(default = "d_backtrack")]
    pub backtrack: f64,
    #[serde(default = "d_armijo")]
    pub armijo: f64,
    #[serde(default = "d_min_step")]
    pub min_step: f64,
    #[serde(default)]
    pub initial: SourceSpec,
}

fn d_tol() -> f64 {
    OptimizerSettings::default().tolerance
}
fn d_iters() -> usize {
    OptimizerSettings::default().max_iterations
}
fn d_step() -> f64 {
    OptimizerSettings::default().initial_step
}
fn d_backtrack() -> f64 {
    OptimizerSettings::default().backtrack
}
fn d_armijo() -> f64 {
    OptimizerSettings::default().armijo
}
fn d_min_step() -> f64 {
    OptimizerSettings::default().min_step
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        Self {
            tolerance: d_tol(),
            max_iterations: d_iters(),
            initial_step: d_step(),
            backtrack: d_backtrack(),
            armijo: d_armijo(),
            min_step: d_min_step(),
            initial: SourceSpec::Zero,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSpec {
    #[serde(default)]
    pub d_min: f64,
    #[serde(default = "d_dmax")]
    pub d_max: f64,
    #[serde(default = "d_bins")]
    pub dvh_bins: usize,
}

fn d_dmax() -> f64 {
    f64::INFINITY
}
fn d_bins() -> usize {
    20
}

impl Default for ReportSpec {
    fn default() -> Self {
        Self { d_min: 0.0, d_max: d_dmax(), dvh_bins: d_bins() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "d_dir")]
    pub dir: PathBuf,
    /// Also write little-endian binary mirrors of the fields.
    #[serde(default)]
    pub binary: bool,
}

fn d_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: d_dir(), binary: false }
    }
}

/// A loaded and validated configuration together with the problem it describes.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub base_dir: PathBuf,
    pub file: ConfigFile,
    pub problem: TransportProblem,
    pub mask: RegionMask,
    pub assumptions: AssumptionReport,
}

fn key_err(key: &str, message: impl Into<String>) -> Error {
    Error::ConfigKey { key: key.into(), message: message.into() }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    RunConfig::from_toml(&text, &base).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_file(file, base_dir)
    }

    pub fn from_file(file: ConfigFile, base_dir: &Path) -> Result<Self> {
        let g = &file.grid;
        if g.extent.len() != g.dims || g.cells.len() != g.dims {
            return Err(key_err(
                "grid",
                format!("dims = {} but extent has {} and cells {} entries", g.dims, g.extent.len(), g.cells.len()),
            ));
        }
        let grid = SpatialGrid::new(g.dims, &g.extent, &g.cells)?;
        let quad = AngularQuadrature::build(g.dims, file.quadrature.order)?;

        let stopping = match &file.energy.stopping_power {
            StoppingSpec::Constant { value } => StoppingPower::Constant(*value),
            StoppingSpec::Tabulated { energies, values } => StoppingPower::tabulated(energies.clone(), values.clone())?,
            StoppingSpec::Moller { density, binding_energy, electron_radius, reference_energy } => {
                StoppingPower::Moller(MollerParams {
                    density: *density,
                    binding_energy: *binding_energy,
                    electron_radius: *electron_radius,
                    reference_energy: *reference_energy,
                })
            }
        };

        if file.materials.is_empty() {
            return Err(key_err("materials", "at least one material is required"));
        }
        let materials: Vec<Material> = file
            .materials
            .iter()
            .map(|m| {
                let kernel = match m.kernel {
                    KernelSpec::Isotropic => KernelKind::Isotropic,
                    KernelSpec::HenyeyGreenstein => KernelKind::HenyeyGreenstein { g: m.g },
                };
                Material::new(m.name.clone(), m.sigma_t, m.sigma_s, kernel)
            })
            .collect();

        let phantom = load_phantom_spec(&file.phantom, &file.materials, grid.cells(), base_dir)?;
        if phantom.cells != grid.cells() {
            return Err(key_err(
                "phantom",
                format!("phantom has cells {:?}, grid expects {:?}", phantom.cells, grid.cells()),
            ));
        }
        let xs = CrossSections::new(g.dims, materials, phantom.materials)?;

        let assumptions = validate_assumptions(&xs, &stopping, (0.0, file.energy.eps_max), file.physics.a3_bound);
        assumptions.clone().into_result(file.physics.allow_supercritical)?;

        let energy = EnergyMap::build(stopping, file.energy.eps_max, file.energy.intervals)?;
        let settings = SolverSettings { tolerance: file.solver.tolerance, max_iterations: file.solver.max_iterations };
        let problem = TransportProblem::new(grid, quad, xs, energy, settings)?;
        let cfg = Self { base_dir: base_dir.to_path_buf(), file, problem, mask: phantom.regions, assumptions };
        cfg.optimizer_settings().validate()?;
        if cfg.file.report.dvh_bins < 2 {
            return Err(key_err("report.dvh_bins", "needs at least 2 bins"));
        }
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn build_source(&self, spec: &SourceSpec, key: &str) -> Result<Field> {
        let p = &self.problem;
        let shape = p.shape();
        let grid = p.grid();
        let f = match spec {
            SourceSpec::Zero => Field::zeros(shape),
            SourceSpec::Constant { value } => Field::constant(shape, *value),
            SourceSpec::Gaussian { center, width, amplitude, region } => {
                if center.len() != grid.dims() {
                    return Err(key_err(key, format!("center needs {} coordinates", grid.dims())));
                }
                if !(*width > 0.0) {
                    return Err(key_err(key, format!("width must be positive, got {width}")));
                }
                let only = match region {
                    Some(r) => {
                        Some(Region::from_label(r).ok_or_else(|| key_err(key, format!("unknown region `{r}`")))?)
                    }
                    None => None,
                };
                let per_voxel: Vec<f64> = (0..grid.n_voxels())
                    .map(|v| {
                        if only.is_some_and(|r| self.mask.labels()[v] != r) {
                            return 0.0;
                        }
                        let c = grid.center(v);
                        let r2: f64 = center.iter().enumerate().map(|(a, x)| (c[a] - x).powi(2)).sum();
                        amplitude * (-r2 / (2.0 * width * width)).exp()
                    })
                    .collect();
                Field::from_fn(shape, |v, _, _| per_voxel[v])
            }
            SourceSpec::Random { seed, scale } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Field::from_fn(shape, |_, _, _| scale * rng.gen::<f64>())
            }
            SourceSpec::File { path } => {
                let f = read_field(&self.resolve(path))?;
                p.check(&f).map_err(|e| key_err(key, e.to_string()))?;
                f
            }
        };
        if f.data().iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(key_err(key, "source must be finite and non-negative"));
        }
        Ok(f)
    }

    /// Source of the `forward` command: `[source]`, else the objective's `q_bar`.
    pub fn source(&self) -> Result<Field> {
        match (&self.file.source, &self.file.objective) {
            (Some(s), _) => self.build_source(s, "source"),
            (None, Some(o)) => self.build_source(&o.q_bar, "objective.q_bar"),
            (None, None) => Err(key_err("source", "forward needs a [source] or [objective] section")),
        }
    }

    pub fn objective(&self) -> Result<ObjectiveConfig> {
        let spec = self.file.objective.as_ref().ok_or_else(|| key_err("objective", "section is required"))?;
        let p = &self.problem;
        let a = spec.alpha;
        let alpha1 = alpha1_from_regions(&self.mask, [a.tumor, a.normal, a.risk]);
        let q_bar = self.build_source(&spec.q_bar, "objective.q_bar")?;
        let psi_bar = match &spec.target {
            TargetSpec::Regions { tumor, normal, risk } => {
                let sphere = sphere_measure(p.grid().dims());
                let labels = self.mask.labels();
                isotropic_target(p.shape(), sphere, |v, _| match labels[v] {
                    Region::Tumor => *tumor,
                    Region::Normal => *normal,
                    Region::Risk => *risk,
                })
            }
            TargetSpec::ExactRecovery => p.solve_forward(&q_bar)?,
            TargetSpec::File { path } => {
                let f = read_field(&self.resolve(path))?;
                p.check(&f).map_err(|e| key_err("objective.target", e.to_string()))?;
                f
            }
        };
        let kind = match spec.kind {
            ObjectiveKindSpec::AngleAveraged => ObjectiveKind::AngleAveraged,
            ObjectiveKindSpec::FullField => ObjectiveKind::FullField,
        };
        ObjectiveConfig::new(kind, alpha1, spec.alpha2, psi_bar, q_bar)
    }

    pub fn optimizer_settings(&self) -> OptimizerSettings {
        let o = &self.file.optimizer;
        OptimizerSettings {
            tolerance: o.tolerance,
            max_iterations: o.max_iterations,
            initial_step: o.initial_step,
            backtrack: o.backtrack,
            armijo: o.armijo,
            min_step: o.min_step,
        }
    }

    pub fn initial_control(&self) -> Result<Field> {
        self.build_source(&self.file.optimizer.initial, "optimizer.initial")
    }

    pub fn output_dir(&self, over: Option<&Path>) -> PathBuf {
        match over {
            Some(p) => p.to_path_buf(),
            None => self.resolve(&self.file.output.dir),
        }
    }
}

fn load_phantom_spec(spec: &PhantomSpec, materials: &[MaterialSpec], cells: &[usize], base: &Path) -> Result<Phantom> {
    match (&spec.path, &spec.material) {
        (Some(p), None) => {
            if spec.region.is_some() {
                return Err(key_err("phantom.region", "only valid for a uniform phantom"));
            }
            let path = if p.is_absolute() { p.clone() } else { base.join(p) };
            load_phantom(&path)
        }
        (None, Some(name)) => {
            let idx = materials
                .iter()
                .position(|m| &m.name == name)
                .ok_or_else(|| key_err("phantom.material", format!("no material named `{name}`")))?;
            let label = spec.region.as_deref().unwrap_or("N");
            let region = Region::from_label(label)
                .ok_or_else(|| key_err("phantom.region", format!("unknown region `{label}` (expected T, N or R)")))?;
            Ok(Phantom::uniform(cells, idx, region))
        }
        _ => Err(key_err("phantom", "give exactly one of `path` or `material`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Assumption;

    const MINIMAL: &str = r#"
[grid]
dims = 2
extent = [2.0, 1.0]
cells = [2, 1]

[quadrature]
order = 4

[energy]
eps_max = 1.0
intervals = 4
stopping_power = { kind = "constant", value = 1.0 }

[[materials]]
name = "water"
sigma_t = 1.0
sigma_s = 0.5
kernel = "isotropic"

[phantom]
material = "water"
"#;

    fn load(text: &str) -> Result<RunConfig> {
        RunConfig::from_toml(text, Path::new("."))
    }

    #[test]
    fn minimal_two_voxel_config() {
        let cfg = load(MINIMAL).unwrap();
        assert_eq!(cfg.problem.grid().n_voxels(), 2);
        assert!(cfg.assumptions.all_passed());
        assert_eq!(cfg.mask.count(Region::Normal), 2);
        assert!(cfg.source().is_err());
    }

    #[test]
    fn negative_sigma_t_is_an_a1_error() {
        let text = MINIMAL.replace("sigma_t = 1.0", "sigma_t = -1.0");
        match load(&text) {
            Err(Error::Assumption { assumption: Assumption::A1, detail }) => {
                assert!(detail.contains("voxel 0"), "{detail}")
            }
            other => panic!("expected A1 error, got {other:?}"),
        }
    }

    #[test]
    fn moller_through_binding_energy_is_an_a4_error() {
        let text = MINIMAL.replace(
            r#"stopping_power = { kind = "constant", value = 1.0 }"#,
            r#"stopping_power = { kind = "moller", density = 3.3428e23, binding_energy = 2.4658e-5, electron_radius = 2.8179403262e-13, reference_energy = 0.5 }"#,
        );
        match load(&text) {
            Err(Error::Assumption { assumption: Assumption::A4, .. }) => {}
            other => panic!("expected A4 error, got {other:?}"),
        }
    }

    #[test]
    fn missing_key_is_named() {
        let text = MINIMAL.replace("order = 4", "");
        let e = load(&text).unwrap_err().to_string();
        assert!(e.contains("order"), "{e}");
        let text = MINIMAL.replace("order = 4", "order = \"four\"");
        assert!(load(&text).is_err());
    }

    #[test]
    fn supercritical_needs_the_flag() {
        let text = MINIMAL.replace("sigma_s = 0.5", "sigma_s = 1.5");
        assert!(load(&text).is_err());
        let text = format!("{text}\n[physics]\nallow_supercritical = true\n");
        assert!(load(&text).is_ok());
    }

    #[test]
    fn sources_and_objective() {
        let text = format!(
            "{MINIMAL}\n[objective]\nalpha = {{ tumor = 1.0, normal = 0.5, risk = 2.0 }}\nalpha2 = 0.1\n\
             target = {{ kind = \"regions\", tumor = 1.0, normal = 0.25, risk = 0.0 }}\n\
             q_bar = {{ kind = \"gaussian\", center = [1.0, 0.5], width = 0.5, amplitude = 2.0 }}\n"
        );
        let cfg = load(&text).unwrap();
        let obj = cfg.objective().unwrap();
        assert_eq!(obj.alpha1, vec![0.5, 0.5]);
        let expected = 0.25 / (2.0 * std::f64::consts::PI);
        assert!((obj.psi_bar.get(1, 2, 3) - expected).abs() < 1e-15);
        let q = cfg.source().unwrap();
        assert!((q.get(0, 0, 0) - 2.0 * (-0.25f64 / 0.5).exp()).abs() < 1e-14);
    }
}
