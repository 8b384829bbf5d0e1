//! Checks of the standing coefficient assumptions A1-A4 plus the
//! sub-criticality condition the source iteration relies on.

use crate::error::{Assumption, Error, Result};
use crate::physics::cross_sections::CrossSections;
use crate::physics::energy::check_positive;
use crate::physics::stopping::StoppingPower;
use crate::quadrature::{composite_gauss, gauss_legendre};

const A4_SAMPLES: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub passed: bool,
    pub voxel: Option<usize>,
    pub energy: Option<f64>,
    pub detail: String,
}

impl AssumptionCheck {
    fn pass(assumption: Assumption) -> Self {
        Self { assumption, passed: true, voxel: None, energy: None, detail: String::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    /// Materials with `sigma_s > sigma_t`.
    pub supercritical: Vec<String>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, a: Assumption) -> &AssumptionCheck {
        self.checks.iter().find(|c| c.assumption == a).expect("every assumption is checked")
    }

    /// First failure as an error; sub-criticality is an error unless allowed.
    pub fn into_result(self, allow_supercritical: bool) -> Result<()> {
        if let Some(c) = self.checks.iter().find(|c| !c.passed) {
            return Err(Error::Assumption { assumption: c.assumption, detail: c.detail.clone() });
        }
        if !self.supercritical.is_empty() {
            let msg =
                format!("scattering exceeds total cross section in material(s) {}", self.supercritical.join(", "));
            if allow_supercritical {
                log::warn!("{msg}; source iteration may converge slowly or not at all");
            } else {
                return Err(Error::Config(format!("{msg} (set physics.allow_supercritical to proceed)")));
            }
        }
        Ok(())
    }
}

/// Run A1-A4 on the cross sections and on `S` over `[range.0, range.1]`.
///
/// `a3_bound` is the constant `c` in `int_{-1}^{1} sigma_s(x, mu) dmu <= c`.
pub fn validate_assumptions(
    xs: &CrossSections,
    stopping: &StoppingPower,
    range: (f64, f64),
    a3_bound: f64,
) -> AssumptionReport {
    let dims = xs.dims();
    let mut checks = Vec::with_capacity(4);

    let mut a1 = AssumptionCheck::pass(Assumption::A1);
    for v in 0..xs.n_voxels() {
        let m = xs.material_of(v);
        if m.sigma_t < 0.0 || m.sigma_s < 0.0 {
            a1 = AssumptionCheck {
                assumption: Assumption::A1,
                passed: false,
                voxel: Some(v),
                energy: None,
                detail: format!(
                    "voxel {v} (material `{}`) has sigma_t = {}, sigma_s = {}",
                    m.name, m.sigma_t, m.sigma_s
                ),
            };
            break;
        }
    }
    checks.push(a1);

    let mut a2 = AssumptionCheck::pass(Assumption::A2);
    for v in 0..xs.n_voxels() {
        let m = xs.material_of(v);
        let kernel_bounded = match m.kernel {
            crate::physics::KernelKind::Isotropic => true,
            crate::physics::KernelKind::HenyeyGreenstein { g } => g.is_finite() && g.abs() < 1.0,
        };
        if !(m.sigma_t.is_finite() && m.sigma_s.is_finite() && kernel_bounded) {
            a2 = AssumptionCheck {
                assumption: Assumption::A2,
                passed: false,
                voxel: Some(v),
                energy: None,
                detail: format!("voxel {v} (material `{}`) has unbounded coefficients", m.name),
            };
            break;
        }
    }
    checks.push(a2);

    let mut a3 = AssumptionCheck::pass(Assumption::A3);
    if checks[1].passed {
        let rule = gauss_legendre(16);
        let integrals: Vec<f64> = xs
            .materials()
            .iter()
            .map(|m| composite_gauss(|mu| m.kernel_value(dims, mu).unwrap_or(f64::NAN), -1.0, 1.0, 64, &rule))
            .collect();
        for v in 0..xs.n_voxels() {
            let i = integrals[xs.voxel_material()[v]];
            if !(i <= a3_bound) {
                a3 = AssumptionCheck {
                    assumption: Assumption::A3,
                    passed: false,
                    voxel: Some(v),
                    energy: None,
                    detail: format!("voxel {v}: kernel integral {i} exceeds bound {a3_bound}"),
                };
                break;
            }
        }
    } else {
        a3.passed = false;
        a3.detail = "not checked: coefficients unbounded".into();
    }
    checks.push(a3);

    let a4 = match check_positive(stopping, range.0, range.1, A4_SAMPLES) {
        Ok(()) => AssumptionCheck::pass(Assumption::A4),
        Err(e) => {
            let energy = first_bad_energy(stopping, range.0, range.1);
            AssumptionCheck {
                assumption: Assumption::A4,
                passed: false,
                voxel: None,
                energy,
                detail: match e {
                    Error::Assumption { detail, .. } => detail,
                    other => other.to_string(),
                },
            }
        }
    };
    checks.push(a4);

    let supercritical = xs.materials().iter().filter(|m| m.sigma_s > m.sigma_t).map(|m| m.name.clone()).collect();

    AssumptionReport { checks, supercritical }
}

fn first_bad_energy(stopping: &StoppingPower, lo: f64, hi: f64) -> Option<f64> {
    (0..=A4_SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / A4_SAMPLES as f64)
        .find(|&e| !matches!(stopping.eval(e), Ok(s) if s > 0.0 && s.is_finite()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::stopping::MollerParams;
    use crate::physics::{KernelKind, Material};

    fn water(sigma_t: f64) -> Material {
        Material::new("water", sigma_t, 0.5, KernelKind::Isotropic)
    }

    #[test]
    fn constants_pass() {
        let xs = CrossSections::uniform(2, 9, water(1.0));
        let r = validate_assumptions(&xs, &StoppingPower::Constant(1.0), (0.0, 1.0), 10.0);
        assert!(r.all_passed());
        assert!(r.supercritical.is_empty());
        assert!(r.into_result(false).is_ok());
    }

    #[test]
    fn negative_sigma_t_reports_voxel() {
        let xs = CrossSections::new(2, vec![water(1.0), water(-1.0)], vec![0, 0, 0, 1, 0]).unwrap();
        let r = validate_assumptions(&xs, &StoppingPower::Constant(1.0), (0.0, 1.0), 10.0);
        let a1 = r.check(Assumption::A1);
        assert!(!a1.passed);
        assert_eq!(a1.voxel, Some(3));
        assert!(matches!(r.into_result(false), Err(Error::Assumption { assumption: Assumption::A1, .. })));
    }

    #[test]
    fn moller_through_binding_energy_fails_a4() {
        let eb = 2.4658e-5;
        let sp = StoppingPower::Moller(MollerParams {
            density: 3.3428e23,
            binding_energy: eb,
            electron_radius: 2.8179403262e-13,
            reference_energy: 1.0,
        });
        // eps in [0, 1] covers physical energies down to 0 < e_B
        let xs = CrossSections::uniform(2, 1, water(1.0));
        let r = validate_assumptions(&xs, &sp, (0.0, 1.0), 10.0);
        let a4 = r.check(Assumption::A4);
        assert!(!a4.passed);
        let e = a4.energy.unwrap();
        assert!(1.0 - e <= eb, "offending energy {e} should be at or below the binding energy");
    }

    #[test]
    fn moller_negative_branch_fails_a4() {
        // a large binding energy drives the printed expression negative
        let sp = StoppingPower::Moller(MollerParams {
            density: 1.0,
            binding_energy: 2.0,
            electron_radius: 1.0,
            reference_energy: 30.0,
        });
        let xs = CrossSections::uniform(2, 1, water(1.0));
        let r = validate_assumptions(&xs, &sp, (0.0, 10.0), 10.0);
        let a4 = r.check(Assumption::A4);
        assert!(!a4.passed);
        let e = a4.energy.unwrap();
        assert!(sp.eval(e).unwrap() <= 0.0);
    }

    #[test]
    fn a3_bound_enforced() {
        let xs = CrossSections::uniform(3, 2, Material::new("dense", 50.0, 40.0, KernelKind::Isotropic));
        // int sigma_s dmu = 40 / (4 pi) * 2 ~ 6.37
        let r = validate_assumptions(&xs, &StoppingPower::Constant(1.0), (0.0, 1.0), 5.0);
        assert!(!r.check(Assumption::A3).passed);
        let r = validate_assumptions(&xs, &StoppingPower::Constant(1.0), (0.0, 1.0), 7.0);
        assert!(r.check(Assumption::A3).passed);
    }

    #[test]
    fn unbounded_kernel_fails_a2() {
        let m = Material::new("bad", 1.0, 0.5, KernelKind::HenyeyGreenstein { g: 1.0 });
        let xs = CrossSections::uniform(2, 1, m);
        let r = validate_assumptions(&xs, &StoppingPower::Constant(1.0), (0.0, 1.0), 10.0);
        assert!(!r.check(Assumption::A2).passed);
    }

    #[test]
    fn supercritical_gated_by_flag() {
        let m = Material::new("hot", 0.5, 1.0, KernelKind::Isotropic);
        let xs = CrossSections::uniform(2, 1, m);
        let r = validate_assumptions(&xs, &StoppingPower::Constant(1.0), (0.0, 1.0), 10.0);
        assert_eq!(r.supercritical, vec!["hot".to_string()]);
        assert!(r.clone().into_result(false).is_err());
        assert!(r.into_result(true).is_ok());
    }
}
