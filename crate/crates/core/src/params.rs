use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// User-facing generation parameters of one crown model.
///
/// | field      | unit          | meaning                                        |
/// |------------|---------------|------------------------------------------------|
/// | `v_target` | m^3           | crown volume after rescaling                   |
/// | `sigma`    | unit-sphere   | std-dev of the Gaussian vertex perturbation    |
/// | `n_subdiv` | -             | icosphere subdivision level                    |
/// | `rho`      | triangles/m^3 | internal triangle density                      |
/// | `area`     | m^2           | area of each internal triangle                 |
/// | `seed`     | -             | master seed of the realization                 |
///
/// `sigma` acts on the unit icosphere *before* the volume rescale, so the
/// absolute dent size grows with the cube root of `v_target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFoliageParams", into = "RawFoliageParams")]
pub struct FoliageParams {
    v_target: f64,
    sigma: f64,
    n_subdiv: u32,
    rho: f64,
    area: f64,
    seed: u64,
}

pub const MAX_SUBDIV: u32 = 8;

impl FoliageParams {
    pub fn new(v_target: f64, sigma: f64, n_subdiv: u32, rho: f64, area: f64, seed: u64) -> Result<Self> {
        if !(v_target.is_finite() && v_target > 0.0) {
            return Err(Error::range("v_target", format!("must be > 0, got {v_target}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::range("sigma", format!("must be >= 0, got {sigma}")));
        }
        if n_subdiv > MAX_SUBDIV {
            return Err(Error::range("n_subdiv", format!("must be <= {MAX_SUBDIV}, got {n_subdiv}")));
        }
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::range("rho", format!("must be >= 0, got {rho}")));
        }
        if !(area.is_finite() && area > 0.0) {
            return Err(Error::range("area", format!("must be > 0, got {area}")));
        }
        Ok(Self { v_target, sigma, n_subdiv, rho, area, seed })
    }

    pub fn v_target(&self) -> f64 {
        self.v_target
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn n_subdiv(&self) -> u32 {
        self.n_subdiv
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn area(&self) -> f64 {
        self.area
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
    pub fn with_rho(self, rho: f64) -> Result<Self> {
        Self::new(self.v_target, self.sigma, self.n_subdiv, rho, self.area, self.seed)
    }
    pub fn with_v_target(self, v_target: f64) -> Result<Self> {
        Self::new(v_target, self.sigma, self.n_subdiv, self.rho, self.area, self.seed)
    }

    /// Number of internal triangles, `floor(rho * v_target)`.
    ///
    /// A 1e-9 nudge absorbs products such as `0.29 * 100 = 28.999999999999996`.
    pub fn triangle_count(&self) -> usize {
        (self.rho * self.v_target + 1e-9).floor() as usize
    }
}

impl Default for FoliageParams {
    fn default() -> Self {
        Self { v_target: 200.0, sigma: 0.1, n_subdiv: 2, rho: 0.125, area: 2.0, seed: 0 }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFoliageParams {
    v_target: f64,
    sigma: f64,
    n_subdiv: u32,
    rho: f64,
    area: f64,
    seed: u64,
}

impl TryFrom<RawFoliageParams> for FoliageParams {
    type Error = Error;
    fn try_from(r: RawFoliageParams) -> Result<Self> {
        FoliageParams::new(r.v_target, r.sigma, r.n_subdiv, r.rho, r.area, r.seed)
    }
}

impl From<FoliageParams> for RawFoliageParams {
    fn from(p: FoliageParams) -> Self {
        RawFoliageParams {
            v_target: p.v_target,
            sigma: p.sigma,
            n_subdiv: p.n_subdiv,
            rho: p.rho,
            area: p.area,
            seed: p.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        let field = |r: Result<FoliageParams>| match r {
            Err(Error::Range { field, .. }) => field,
            other => panic!("expected range error, got {other:?}"),
        };
        assert_eq!(field(FoliageParams::new(0.0, 0.1, 2, 0.1, 2.0, 0)), "v_target");
        assert_eq!(field(FoliageParams::new(1.0, -0.1, 2, 0.1, 2.0, 0)), "sigma");
        assert_eq!(field(FoliageParams::new(1.0, 0.1, 9, 0.1, 2.0, 0)), "n_subdiv");
        assert_eq!(field(FoliageParams::new(1.0, 0.1, 2, -1.0, 2.0, 0)), "rho");
        assert_eq!(field(FoliageParams::new(1.0, 0.1, 2, 0.1, 0.0, 0)), "area");
        assert_eq!(field(FoliageParams::new(f64::NAN, 0.1, 2, 0.1, 1.0, 0)), "v_target");
    }

    #[test]
    fn triangle_count_floors() {
        let p = FoliageParams::new(200.0, 0.1, 2, 0.125, 2.0, 0).unwrap();
        assert_eq!(p.triangle_count(), 25);
        let p = FoliageParams::new(1000.0, 0.1, 2, 0.5, 2.0, 0).unwrap();
        assert_eq!(p.triangle_count(), 500);
        let p = FoliageParams::new(100.0, 0.1, 2, 0.29, 2.0, 0).unwrap();
        assert_eq!(p.triangle_count(), 29);
        let p = FoliageParams::new(10.0, 0.1, 2, 0.15, 2.0, 0).unwrap();
        assert_eq!(p.triangle_count(), 1);
        let p = FoliageParams::new(200.0, 0.1, 2, 0.0, 2.0, 0).unwrap();
        assert_eq!(p.triangle_count(), 0);
    }
}
