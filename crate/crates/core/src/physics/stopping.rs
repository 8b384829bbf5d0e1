//! Stopping-power models.
//!
//! Every model is evaluated in the solver's energy coordinate `eps`, which
//! runs from `0` (the high-energy end, where the fluence vanishes) up to
//! `eps_max`. The Moller model is written in physical kinetic energy `E`
//! (electron rest-energy units) and is mapped through `E = e_ref - eps`.

use std::f64::consts::LN_2;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Moller stopping power for electrons, as a function of kinetic energy `e`
/// in electron rest-energy units.
///
/// `density` is the electron density and `electron_radius` the classical
/// electron radius; the prefactor `2 pi r_e^2 rho` sets the length unit.
/// The expression is evaluated exactly as written, including the logarithm
/// `ln((e - e_B) / (2 e_B (e - e_B)))`; it has a pole at `e = e_B` and is
/// not guaranteed positive, which is why callers validate it on their range.
pub fn moller_stopping_power(e: f64, density: f64, binding_energy: f64, electron_radius: f64) -> Result<f64> {
    let eb = binding_energy;
    if !(e > eb) {
        return Err(Error::Domain(format!(
            "Moller stopping power needs energy above the binding energy ({e} <= {eb})"
        )));
    }
    let prefactor = 2.0 * PI * electron_radius * electron_radius * density * (e + 1.0).powi(2) / (e * (e + 1.0));
    let d = e - eb;
    let bracket = e / d + 2.0 * (d / (2.0 * eb * d)).ln() + ((d * d) / 4.0 - eb * eb) / (2.0 * (e + 1.0).powi(2))
        - (2.0 * e + 1.0) / (e + 1.0).powi(2) * LN_2;
    Ok(prefactor * bracket)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MollerParams {
    pub density: f64,
    pub binding_energy: f64,
    pub electron_radius: f64,
    /// Physical kinetic energy at `eps = 0`.
    pub reference_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StoppingPower {
    Constant(f64),
    /// Piecewise-linear interpolation through `(energies[i], values[i])`.
    Tabulated {
        energies: Vec<f64>,
        values: Vec<f64>,
    },
    Moller(MollerParams),
}

impl StoppingPower {
    pub fn tabulated(energies: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if energies.len() < 2 || energies.len() != values.len() {
            return Err(Error::Config("tabulated stopping power needs at least two (energy, value) pairs".into()));
        }
        if energies.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("tabulated stopping power energies must be strictly increasing".into()));
        }
        if energies.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Config("tabulated stopping power contains non-finite entries".into()));
        }
        Ok(StoppingPower::Tabulated { energies, values })
    }

    /// `S(eps) = a + b eps`, represented exactly as a two-point table on `[0, eps_max]`.
    pub fn linear(a: f64, b: f64, eps_max: f64) -> Self {
        StoppingPower::Tabulated { energies: vec![0.0, eps_max], values: vec![a, a + b * eps_max] }
    }

    pub fn eval(&self, eps: f64) -> Result<f64> {
        match self {
            StoppingPower::Constant(c) => Ok(*c),
            StoppingPower::Tabulated { energies, values } => {
                let n = energies.len();
                let tol = 1e-12 * (energies[n - 1] - energies[0]).abs().max(1.0);
                if eps < energies[0] - tol || eps > energies[n - 1] + tol {
                    return Err(Error::Domain(format!(
                        "energy {eps} outside tabulated range [{}, {}]",
                        energies[0],
                        energies[n - 1]
                    )));
                }
                let i = match energies.partition_point(|&e| e <= eps) {
                    0 => 0,
                    p if p >= n => n - 2,
                    p => p - 1,
                };
                let t = ((eps - energies[i]) / (energies[i + 1] - energies[i])).clamp(0.0, 1.0);
                Ok(values[i] + t * (values[i + 1] - values[i]))
            }
            StoppingPower::Moller(p) => {
                moller_stopping_power(p.reference_energy - eps, p.density, p.binding_energy, p.electron_radius)
            }
        }
    }

    /// Points in `(a, b)` where the model is not smooth.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        match self {
            StoppingPower::Tabulated { energies, .. } => energies.iter().copied().filter(|&e| e > a && e < b).collect(),
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RE: f64 = 2.8179403262e-13;
    const RHO: f64 = 3.3428e23;
    const EB: f64 = 2.4658e-5;

    #[test]
    fn moller_matches_term_by_term_evaluation() {
        let e = 10.0 * EB;
        // independent evaluation, one printed term at a time
        let pre = 2.0 * PI * RE * RE * RHO * (e + 1.0) * (e + 1.0) / (e * (e + 1.0));
        let t1 = e / (e - EB);
        let t2 = 2.0 * ((e - EB) / (2.0 * EB * (e - EB))).ln();
        let t3 = 1.0 / (2.0 * (e + 1.0) * (e + 1.0)) * ((e - EB) * (e - EB) / 4.0 - EB * EB);
        let t4 = -(2.0 * e + 1.0) / ((e + 1.0) * (e + 1.0)) * 2f64.ln();
        let expected = pre * (t1 + t2 + t3 + t4);
        let got = moller_stopping_power(e, RHO, EB, RE).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-13, "{got} vs {expected}");
    }

    #[test]
    fn moller_finite_on_sweep() {
        let e_max = 40.0;
        for i in 0..=1000 {
            let e = 2.0 * EB + (e_max - 2.0 * EB) * i as f64 / 1000.0;
            let s = moller_stopping_power(e, RHO, EB, RE).unwrap();
            assert!(s.is_finite(), "non-finite at {e}");
        }
    }

    #[test]
    fn moller_rejects_energy_at_or_below_binding() {
        assert!(moller_stopping_power(EB, RHO, EB, RE).is_err());
        assert!(moller_stopping_power(0.5 * EB, RHO, EB, RE).is_err());
    }

    #[test]
    fn constant_kind_is_constant() {
        let s = StoppingPower::Constant(1.0);
        for eps in [0.0, 0.3, 7.0] {
            assert_eq!(s.eval(eps).unwrap(), 1.0);
        }
    }

    #[test]
    fn tabulated_is_piecewise_linear() {
        let s = StoppingPower::tabulated(vec![0.0, 1.0, 3.0], vec![1.0, 2.0, 0.0]).unwrap();
        assert_eq!(s.eval(0.5).unwrap(), 1.5);
        assert_eq!(s.eval(2.0).unwrap(), 1.0);
        assert_eq!(s.eval(3.0).unwrap(), 0.0);
        assert!(s.eval(3.5).is_err());
        assert!(StoppingPower::tabulated(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        let lin = StoppingPower::linear(1.0, 1.0, 1.0);
        assert!((lin.eval(0.25).unwrap() - 1.25).abs() < 1e-15);
    }
}
