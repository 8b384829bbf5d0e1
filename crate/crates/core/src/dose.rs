//! Dose from the fluence, per-region statistics and dose-volume histograms.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{Region, RegionMask};
use crate::physics::EnergyMap;
use crate::quadrature::AngularQuadrature;

/// Relative dose per voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct DoseMap {
    pub values: Vec<f64>,
}

impl DoseMap {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// `D(x) = sum_k c_k sum_m w_m S(eps_k) psi(x, m, k)`.
pub fn compute_dose(psi: &Field, quad: &AngularQuadrature, energy: &EnergyMap) -> Result<DoseMap> {
    let s = psi.shape();
    if s.directions != quad.len() || s.nodes != energy.n_nodes() {
        return Err(Error::Shape(format!(
            "fluence {s:?} vs {} directions and {} energy nodes",
            quad.len(),
            energy.n_nodes()
        )));
    }
    let mut values = vec![0.0; s.voxels];
    for k in 0..s.nodes {
        let ck = energy.weights()[k] * energy.s_nodes()[k];
        for m in 0..s.directions {
            let f = ck * quad.weight(m);
            let row = &psi.slice(k)[m * s.voxels..(m + 1) * s.voxels];
            values.iter_mut().zip(row).for_each(|(d, p)| *d += f * p);
        }
    }
    Ok(DoseMap { values })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionStats {
    pub region: Region,
    pub count: usize,
    /// `None` for an empty region.
    pub min: Option<f64>,
    pub mean: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoseReport {
    pub regions: Vec<RegionStats>,
    pub d_min: f64,
    pub d_max: f64,
    /// Fraction of tumour voxels with `D < d_min`.
    pub tumor_underdose: f64,
    /// Fraction of risk voxels with `D > d_max`.
    pub risk_overdose: f64,
}

fn check_mask(dose: &DoseMap, mask: &RegionMask) -> Result<()> {
    if dose.len() != mask.len() {
        return Err(Error::Shape(format!("dose has {} voxels, mask {}", dose.len(), mask.len())));
    }
    Ok(())
}

/// Per-region min / mean / max and the advisory bound violations.
pub fn region_stats(dose: &DoseMap, mask: &RegionMask, d_min: f64, d_max: f64) -> Result<DoseReport> {
    check_mask(dose, mask)?;
    let mut regions = Vec::with_capacity(3);
    for region in Region::ALL {
        let vals: Vec<f64> = mask.voxels(region).map(|v| dose.values[v]).collect();
        let count = vals.len();
        let (min, mean, max) = if count == 0 {
            (None, None, None)
        } else {
            (
                Some(vals.iter().copied().fold(f64::INFINITY, f64::min)),
                Some(vals.iter().sum::<f64>() / count as f64),
                Some(vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            )
        };
        regions.push(RegionStats { region, count, min, mean, max });
    }
    let fraction = |region: Region, bad: &dyn Fn(f64) -> bool| {
        let n = mask.count(region);
        if n == 0 {
            0.0
        } else {
            mask.voxels(region).filter(|&v| bad(dose.values[v])).count() as f64 / n as f64
        }
    };
    Ok(DoseReport {
        regions,
        d_min,
        d_max,
        tumor_underdose: fraction(Region::Tumor, &|d| d < d_min),
        risk_overdose: fraction(Region::Risk, &|d| d > d_max),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DvhCurve {
    pub region: Region,
    /// Fraction of the region's voxels with `D >= edges[j]`.
    pub fractions: Vec<f64>,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dvh {
    pub edges: Vec<f64>,
    pub curves: Vec<DvhCurve>,
}

/// Cumulative histograms on the edges `j * D_max / (bins - 1)`, `j = 0..=bins`.
pub fn dvh(dose: &DoseMap, mask: &RegionMask, bins: usize) -> Result<Dvh> {
    check_mask(dose, mask)?;
    if bins < 2 {
        return Err(Error::Config(format!("dvh needs at least 2 bins, got {bins}")));
    }
    let top = dose.max();
    let width = if top > 0.0 { top / (bins - 1) as f64 } else { 1.0 / (bins - 1) as f64 };
    let mut edges: Vec<f64> = (0..=bins).map(|j| j as f64 * width).collect();
    if top > 0.0 {
        edges[bins - 1] = top;
    }
    let curves = Region::ALL
        .iter()
        .map(|&region| {
            let vals: Vec<f64> = mask.voxels(region).map(|v| dose.values[v]).collect();
            let n = vals.len();
            let fractions = edges
                .iter()
                .map(|&d| if n == 0 { 0.0 } else { vals.iter().filter(|&&x| x >= d).count() as f64 / n as f64 })
                .collect();
            DvhCurve { region, fractions, empty: n == 0 }
        })
        .collect();
    Ok(Dvh { edges, curves })
}

/// `1/2 sum_v vol alpha1_v (D_v - target_v)^2`.
pub fn dose_objective(dose: &DoseMap, target: &[f64], alpha1: &[f64], cell_volume: f64) -> Result<f64> {
    if target.len() != dose.len() || alpha1.len() != dose.len() {
        return Err(Error::Shape("dose, target and weights differ in length".into()));
    }
    let s: f64 = dose.values.iter().zip(target).zip(alpha1).map(|((d, t), a)| a * (d - t) * (d - t)).sum();
    Ok(0.5 * cell_volume * s)
}
