//! Lossy-dielectric material and Fresnel reflection coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, VACUUM_PERMITTIVITY};

/// Electromagnetic parameters of a surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMaterial", into = "RawMaterial")]
pub struct Material {
    eps_r: f64,
    kappa: f64,
    mu_s: f64,
}

impl Material {
    /// Vegetation constants used for the foliage triangles:
    /// `eps_r = 17`, `kappa = 0.05 S/m`, `mu_s = 0.5`.
    pub const VEGETATION: Material = Material { eps_r: 17.0, kappa: 0.05, mu_s: 0.5 };

    pub fn new(eps_r: f64, kappa: f64, mu_s: f64) -> Result<Self> {
        if !(eps_r.is_finite() && eps_r >= 1.0) {
            return Err(Error::range("eps_r", format!("must be >= 1, got {eps_r}")));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::range("kappa", format!("must be >= 0, got {kappa}")));
        }
        if !(0.0..=1.0).contains(&mu_s) {
            return Err(Error::range("mu_s", format!("must be in [0, 1], got {mu_s}")));
        }
        Ok(Self { eps_r, kappa, mu_s })
    }

    pub fn eps_r(&self) -> f64 {
        self.eps_r
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn mu_s(&self) -> f64 {
        self.mu_s
    }

    /// `eps_r - j kappa / (2 pi f eps0)`.
    pub fn complex_permittivity(&self, carrier_hz: f64) -> Complex64 {
        Complex64::new(self.eps_r, -self.kappa / (2.0 * std::f64::consts::PI * carrier_hz * VACUUM_PERMITTIVITY))
    }

    /// Field factor kept by the specular lobe, `sqrt(1 - mu_s^2)`.
    pub fn specular_factor(&self) -> f64 {
        (1.0 - self.mu_s * self.mu_s).sqrt()
    }
}

impl Default for Material {
    fn default() -> Self {
        Self::VEGETATION
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    eps_r: f64,
    kappa: f64,
    mu_s: f64,
}

impl TryFrom<RawMaterial> for Material {
    type Error = Error;
    fn try_from(r: RawMaterial) -> Result<Self> {
        Material::new(r.eps_r, r.kappa, r.mu_s)
    }
}

impl From<Material> for RawMaterial {
    fn from(m: Material) -> Self {
        RawMaterial { eps_r: m.eps_r, kappa: m.kappa, mu_s: m.mu_s }
    }
}

/// Reflection coefficients for the two linear polarizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflection {
    /// E-field perpendicular to the plane of incidence.
    pub te: Complex64,
    /// E-field in the plane of incidence. Incident and reflected basis
    /// vectors are `s x d_in` and `s x d_out`, so `tm == -te` at normal
    /// incidence.
    pub tm: Complex64,
}

impl Reflection {
    /// Polarization-averaged magnitude, `sqrt((|te|^2 + |tm|^2) / 2)`.
    pub fn rms_magnitude(&self) -> f64 {
        ((self.te.norm_sqr() + self.tm.norm_sqr()) / 2.0).sqrt()
    }
}

/// Fresnel coefficients of a half-space with complex permittivity
/// `eps = eps_r - j kappa/(2 pi f eps0)` seen from vacuum.
///
/// `cos_incidence` is clamped to `[0, 1]`.
pub fn fresnel_reflection(cos_incidence: f64, material: &Material, carrier_hz: f64) -> Reflection {
    let c = cos_incidence.clamp(0.0, 1.0);
    let eps = material.complex_permittivity(carrier_hz);
    if eps == Complex64::new(1.0, 0.0) {
        return Reflection { te: Complex64::new(0.0, 0.0), tm: Complex64::new(0.0, 0.0) };
    }
    let root = (eps - (1.0 - c * c)).sqrt();
    let te = (c - root) / (c + root);
    let tm = (eps * c - root) / (eps * c + root);
    Reflection { te, tm }
}

#[cfg(test)]
mod tests {
    use super::*;

    const F: f64 = 80e9;

    #[test]
    fn normal_incidence_vegetation() {
        let r = fresnel_reflection(1.0, &Material::VEGETATION, F);
        let eps = Material::VEGETATION.complex_permittivity(F);
        assert!((eps.im + 0.011_234).abs() < 1e-5, "{eps}");
        let closed = ((1.0 - eps.sqrt()) / (1.0 + eps.sqrt())).norm();
        assert!((r.te.norm() - closed).abs() < 1e-12);
        assert!((r.tm.norm() - closed).abs() < 1e-12);
        assert!((r.te.norm() - 0.6096).abs() < 1e-3, "{}", r.te.norm());
        // TM basis flips at normal incidence
        assert!((r.te + r.tm).norm() < 1e-12);
    }

    #[test]
    fn grazing_limit_is_total() {
        let r = fresnel_reflection(1e-9, &Material::VEGETATION, F);
        assert!((r.te.norm() - 1.0).abs() < 1e-6);
        assert!((r.tm.norm() - 1.0).abs() < 1e-6);
        let r = fresnel_reflection(0.0, &Material::VEGETATION, F);
        assert!((r.te + 1.0).norm() < 1e-12 && (r.tm + 1.0).norm() < 1e-12);
    }

    #[test]
    fn vacuum_interface_does_not_reflect() {
        let vacuum = Material::new(1.0, 0.0, 0.0).unwrap();
        for k in 0..=20 {
            let r = fresnel_reflection(k as f64 / 20.0, &vacuum, F);
            assert!(r.te.norm() < 1e-12 && r.tm.norm() < 1e-12);
        }
    }

    #[test]
    fn passive_and_continuous() {
        let m = Material::new(5.0, 3.0, 0.0).unwrap();
        let mut prev = fresnel_reflection(0.0, &m, 1e9);
        for k in 1..=10_000 {
            let r = fresnel_reflection(k as f64 / 10_000.0, &m, 1e9);
            assert!(r.te.norm() <= 1.0 + 1e-12 && r.tm.norm() <= 1.0 + 1e-12);
            assert!((r.te - prev.te).norm() < 1e-2 && (r.tm - prev.tm).norm() < 1e-2);
            prev = r;
        }
    }

    #[test]
    fn brewster_dip_for_lossless() {
        let m = Material::new(4.0, 0.0, 0.0).unwrap();
        // tan(theta_B) = 2
        let cos_b = 1.0 / 5f64.sqrt();
        assert!(fresnel_reflection(cos_b, &m, F).tm.norm() < 1e-12);
    }

    #[test]
    fn material_ranges() {
        assert!(Material::new(0.5, 0.0, 0.0).is_err());
        assert!(Material::new(2.0, -1.0, 0.0).is_err());
        assert!(Material::new(2.0, 0.0, 1.5).is_err());
    }
}
