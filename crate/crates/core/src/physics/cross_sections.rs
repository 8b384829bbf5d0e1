use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::sphere_measure;

/// Angular shape of the scattering kernel `sigma_s(x, mu)`, `mu = Omega' . Omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Isotropic,
    /// Henyey-Greenstein shape with anisotropy `g` in `(-1, 1)`; in 2D the
    /// circular analogue `(1 - g^2) / (2 pi (1 + g^2 - 2 g cos theta))`.
    HenyeyGreenstein {
        g: f64,
    },
}

/// `sigma_s(mu)` for a kernel with total scattering `sigma_s` (integral over the sphere or circle).
pub fn kernel_eval(kind: KernelKind, sigma_s: f64, dims: usize, mu: f64) -> Result<f64> {
    if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&mu) {
        return Err(Error::Domain(format!("scattering cosine {mu} outside [-1, 1]")));
    }
    let mu = mu.clamp(-1.0, 1.0);
    Ok(match kind {
        KernelKind::Isotropic => sigma_s / sphere_measure(dims),
        KernelKind::HenyeyGreenstein { g } => {
            let denom = 1.0 + g * g - 2.0 * g * mu;
            match dims {
                2 => sigma_s * (1.0 - g * g) / (2.0 * PI * denom),
                3 => sigma_s * (1.0 - g * g) / (4.0 * PI * denom * denom.sqrt()),
                _ => return Err(Error::Domain(format!("unsupported dimension {dims}"))),
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    pub sigma_t: f64,
    pub sigma_s: f64,
    pub kernel: KernelKind,
}

impl Material {
    pub fn new(name: impl Into<String>, sigma_t: f64, sigma_s: f64, kernel: KernelKind) -> Self {
        Self { name: name.into(), sigma_t, sigma_s, kernel }
    }

    pub fn kernel_value(&self, dims: usize, mu: f64) -> Result<f64> {
        kernel_eval(self.kernel, self.sigma_s, dims, mu)
    }
}

/// Per-voxel material assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSections {
    dims: usize,
    materials: Vec<Material>,
    voxel_material: Vec<usize>,
}

impl CrossSections {
    pub fn new(dims: usize, materials: Vec<Material>, voxel_material: Vec<usize>) -> Result<Self> {
        if materials.is_empty() {
            return Err(Error::Config("at least one material is required".into()));
        }
        if let Some((v, &m)) = voxel_material.iter().enumerate().find(|(_, &m)| m >= materials.len()) {
            return Err(Error::Config(format!(
                "voxel {v} refers to material {m}, but only {} materials are defined",
                materials.len()
            )));
        }
        Ok(Self { dims, materials, voxel_material })
    }

    /// One material everywhere.
    pub fn uniform(dims: usize, n_voxels: usize, material: Material) -> Self {
        Self { dims, materials: vec![material], voxel_material: vec![0; n_voxels] }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn n_voxels(&self) -> usize {
        self.voxel_material.len()
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn voxel_material(&self) -> &[usize] {
        &self.voxel_material
    }

    pub fn material_of(&self, v: usize) -> &Material {
        &self.materials[self.voxel_material[v]]
    }

    pub fn sigma_t(&self, v: usize) -> f64 {
        self.material_of(v).sigma_t
    }

    pub fn sigma_s(&self, v: usize) -> f64 {
        self.material_of(v).sigma_s
    }

    pub fn sigma_t_field(&self) -> Vec<f64> {
        (0..self.n_voxels()).map(|v| self.sigma_t(v)).collect()
    }

    pub fn has_scattering(&self) -> bool {
        let mut used = vec![false; self.materials.len()];
        for &m in &self.voxel_material {
            used[m] = true;
        }
        self.materials.iter().zip(used).any(|(m, u)| u && m.sigma_s != 0.0)
    }
}
