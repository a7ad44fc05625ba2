//! Sweep configuration files (TOML with strict keys).
//!
//! ```toml
//! [geometry]
//! tx = [0.0, 0.0, 1.5]          # m
//! rx = [30.0, 0.0, 1.5]         # m
//! crown_center = [15.0, 0.0, 1.5]
//! carrier_hz = 80e9
//!
//! [geometry.ground]             # optional, absent = no ground
//! height = 0.0
//! material = { eps_r = 5.0, kappa = 0.01, mu_s = 0.0 }
//!
//! [material]                    # foliage triangles
//! eps_r = 17.0
//! kappa = 0.05
//! mu_s = 0.5
//!
//! [foliage]
//! v_target = 200.0
//! sigma = 0.1
//! n_subdiv = 2
//! rho = 0.125
//! area = 2.0
//!
//! [tracer]
//! n_candidate_rays = 100000
//! max_depth = 8
//! rx_sphere_growth = 1.0
//! enable_diffuse = true
//!
//! [channel]
//! bandwidth_hz = 2e9
//! oversample = 8
//! gate_db = 30.0
//!
//! [sweep]
//! axis = "rho"                  # rho | v_target | none
//! values = [0.0, 0.25, 0.5]     # default grid per axis when omitted
//! realizations = 50
//! seed = 1
//! seeds = "shared"              # shared | per_point
//! out_dir = "out"               # optional
//! ```
//!
//! Every section and key is optional; omitted keys take the defaults shown.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{DEFAULT_BANDWIDTH_HZ, DEFAULT_GATE_DB, DEFAULT_OVERSAMPLE};
use crate::params::FoliageParams;
use crate::ray::{GroundPlane, Material, TracerConfig};
use crate::rng::mix_seed;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub tx: [f64; 3],
    pub rx: [f64; 3],
    /// Where the envelope's volume centroid is placed.
    pub crown_center: [f64; 3],
    pub carrier_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground: Option<GroundPlane>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            tx: [0.0, 0.0, 1.5],
            rx: [30.0, 0.0, 1.5],
            crown_center: [15.0, 0.0, 1.5],
            carrier_hz: 80e9,
            ground: None,
        }
    }
}

impl GeometryConfig {
    pub fn tx(&self) -> Vec3 {
        Vec3::from(self.tx)
    }
    pub fn rx(&self) -> Vec3 {
        Vec3::from(self.rx)
    }
    pub fn crown_center(&self) -> Vec3 {
        Vec3::from(self.crown_center)
    }
    pub fn distance(&self) -> f64 {
        (self.rx() - self.tx()).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub bandwidth_hz: f64,
    pub oversample: u32,
    pub gate_db: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { bandwidth_hz: DEFAULT_BANDWIDTH_HZ, oversample: DEFAULT_OVERSAMPLE, gate_db: DEFAULT_GATE_DB }
    }
}

/// Everything needed to simulate one realization, apart from the foliage
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub geometry: GeometryConfig,
    pub material: Material,
    pub tracer: TracerConfig,
    pub channel: ChannelConfig,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if ![g.tx, g.rx, g.crown_center].iter().flatten().all(|c| c.is_finite()) {
            return Err(Error::range("geometry", "positions must be finite"));
        }
        if g.distance() < 1e-6 {
            return Err(Error::range("rx", "TX and RX coincide"));
        }
        if !(g.carrier_hz.is_finite() && g.carrier_hz > 0.0) {
            return Err(Error::range("carrier_hz", "must be > 0"));
        }
        self.tracer.validate()?;
        let c = &self.channel;
        if !(c.bandwidth_hz.is_finite() && c.bandwidth_hz > 0.0) {
            return Err(Error::range("bandwidth_hz", "must be > 0"));
        }
        if c.oversample < 2 {
            return Err(Error::range("oversample", "must be >= 2"));
        }
        if !(c.gate_db.is_finite() && c.gate_db > 0.0) {
            return Err(Error::range("gate_db", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Rho,
    VTarget,
    None,
}

impl SweepAxis {
    /// Grid used when `values` is omitted: nine densities in [0, 1] or five
    /// volumes in [200, 1000] m^3.
    pub fn default_values(self, base: &FoliageParams) -> Vec<f64> {
        match self {
            SweepAxis::Rho => (0..=8).map(|k| k as f64 * 0.125).collect(),
            SweepAxis::VTarget => vec![200.0, 400.0, 600.0, 800.0, 1000.0],
            SweepAxis::None => vec![base.rho()],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Rho => "rho",
            SweepAxis::VTarget => "v_target",
            SweepAxis::None => "none",
        }
    }

    /// Base parameters with the swept value substituted.
    pub fn apply(self, base: &FoliageParams, value: f64) -> Result<FoliageParams> {
        match self {
            SweepAxis::Rho => base.with_rho(value),
            SweepAxis::VTarget => base.with_v_target(value),
            SweepAxis::None => Ok(*base),
        }
    }

    /// Value reported for the point when nothing is swept.
    fn point_value(self, base: &FoliageParams, value: f64) -> f64 {
        match self {
            SweepAxis::None => base.rho(),
            _ => value,
        }
    }
}

/// How realization seeds are derived from the global seed.
///
/// Both use [`mix_seed`](crate::rng::mix_seed) (a SplitMix64 fold).
/// `Shared` gives realization `r` the same seed at every sweep point, so the
/// points differ only in the swept parameter; `PerPoint` also mixes in the
/// point index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedScheme {
    #[default]
    Shared,
    PerPoint,
}

impl SeedScheme {
    pub fn derive(self, global_seed: u64, point_index: usize, realization: usize) -> u64 {
        match self {
            SeedScheme::Shared => mix_seed(&[global_seed, realization as u64]),
            SeedScheme::PerPoint => mix_seed(&[global_seed, point_index as u64, realization as u64]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub simulation: SimulationConfig,
    pub foliage: FoliageParams,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    pub seeds: SeedScheme,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let foliage = FoliageParams::default();
        Self {
            simulation: SimulationConfig::default(),
            foliage,
            axis: SweepAxis::None,
            values: SweepAxis::None.default_values(&foliage),
            realizations: 50,
            seed: 1,
            seeds: SeedScheme::Shared,
            out_dir: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.simulation.validate()?;
        if self.values.is_empty() {
            return Err(Error::range("values", "sweep needs at least one value"));
        }
        if self.realizations == 0 {
            return Err(Error::range("realizations", "must be >= 1"));
        }
        for &v in &self.values {
            self.axis.apply(&self.foliage, v)?;
        }
        Ok(())
    }

    /// Foliage parameters of sweep point `index` (seed not yet applied).
    pub fn point_params(&self, index: usize) -> Result<FoliageParams> {
        self.axis.apply(&self.foliage, self.values[index])
    }

    pub fn point_value(&self, index: usize) -> f64 {
        self.axis.point_value(&self.foliage, self.values[index])
    }

    pub fn realization_seed(&self, point_index: usize, realization: usize) -> u64 {
        self.seeds.derive(self.seed, point_index, realization)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&RawConfig::from(self)).expect("config serializes")
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    geometry: GeometryConfig,
    #[serde(default)]
    material: RawMaterialSection,
    #[serde(default)]
    foliage: RawFoliage,
    #[serde(default)]
    tracer: TracerConfig,
    #[serde(default)]
    channel: ChannelConfig,
    #[serde(default)]
    sweep: RawSweep,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawMaterialSection {
    eps_r: f64,
    kappa: f64,
    mu_s: f64,
}

impl Default for RawMaterialSection {
    fn default() -> Self {
        let m = Material::VEGETATION;
        Self { eps_r: m.eps_r(), kappa: m.kappa(), mu_s: m.mu_s() }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawFoliage {
    v_target: f64,
    sigma: f64,
    n_subdiv: u32,
    rho: f64,
    area: f64,
}

impl Default for RawFoliage {
    fn default() -> Self {
        let p = FoliageParams::default();
        Self { v_target: p.v_target(), sigma: p.sigma(), n_subdiv: p.n_subdiv(), rho: p.rho(), area: p.area() }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSweep {
    axis: SweepAxis,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    realizations: usize,
    seed: u64,
    seeds: SeedScheme,
    #[serde(skip_serializing_if = "Option::is_none")]
    out_dir: Option<PathBuf>,
}

impl Default for RawSweep {
    fn default() -> Self {
        Self { axis: SweepAxis::None, values: None, realizations: 50, seed: 1, seeds: SeedScheme::Shared, out_dir: None }
    }
}

impl From<&SweepConfig> for RawConfig {
    fn from(c: &SweepConfig) -> Self {
        let m = c.simulation.material;
        let f = c.foliage;
        RawConfig {
            geometry: c.simulation.geometry,
            material: RawMaterialSection { eps_r: m.eps_r(), kappa: m.kappa(), mu_s: m.mu_s() },
            foliage: RawFoliage { v_target: f.v_target(), sigma: f.sigma(), n_subdiv: f.n_subdiv(), rho: f.rho(), area: f.area() },
            tracer: c.simulation.tracer,
            channel: c.simulation.channel,
            sweep: RawSweep {
                axis: c.axis,
                values: Some(c.values.clone()),
                realizations: c.realizations,
                seed: c.seed,
                seeds: c.seeds,
                out_dir: c.out_dir.clone(),
            },
        }
    }
}

impl TryFrom<RawConfig> for SweepConfig {
    type Error = Error;
    fn try_from(raw: RawConfig) -> Result<Self> {
        let m = raw.material;
        let f = raw.foliage;
        let foliage = FoliageParams::new(f.v_target, f.sigma, f.n_subdiv, f.rho, f.area, raw.sweep.seed)?;
        let config = SweepConfig {
            simulation: SimulationConfig {
                geometry: raw.geometry,
                material: Material::new(m.eps_r, m.kappa, m.mu_s)?,
                tracer: raw.tracer,
                channel: raw.channel,
            },
            foliage,
            axis: raw.sweep.axis,
            values: raw.sweep.values.unwrap_or_else(|| raw.sweep.axis.default_values(&foliage)),
            realizations: raw.sweep.realizations,
            seed: raw.sweep.seed,
            seeds: raw.sweep.seeds,
            out_dir: raw.sweep.out_dir,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Parses configuration text. Syntax errors carry the line and column;
/// unknown or duplicate keys are rejected.
pub fn parse_config_str(text: &str) -> Result<SweepConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    SweepConfig::try_from(raw)
}

pub fn parse_config(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(message) => Error::Parse { path: path.to_owned(), message },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_defaults() {
        let c = parse_config_str("").unwrap();
        assert_eq!(c.foliage.sigma(), 0.1);
        assert_eq!(c.foliage.area(), 2.0);
        assert_eq!(c.foliage.n_subdiv(), 2);
        assert_eq!(c.foliage.rho(), 0.125);
        assert_eq!(c.simulation.geometry.carrier_hz, 80e9);
        assert_eq!(c.simulation.channel.bandwidth_hz, 2e9);
        assert_eq!(c.simulation.material, Material::VEGETATION);
        assert_eq!(c.simulation.tracer, TracerConfig::desk_scale());
        assert_eq!(c.realizations, 50);
        assert!(c.simulation.geometry.ground.is_none());
    }

    #[test]
    fn range_error_names_field() {
        match parse_config_str("[foliage]\nrho = -1.0\n") {
            Err(Error::Range { field, .. }) => assert_eq!(field, "rho"),
            other => panic!("{other:?}"),
        }
        match parse_config_str("[material]\nmu_s = 2.0\n") {
            Err(Error::Range { field, .. }) => assert_eq!(field, "mu_s"),
            other => panic!("{other:?}"),
        }
        match parse_config_str("[tracer]\nmax_depth = 30\n") {
            Err(Error::Range { field, .. }) => assert_eq!(field, "max_depth"),
            other => panic!("{other:?}"),
        }
        match parse_config_str("[sweep]\naxis = \"rho\"\nvalues = [0.5, -0.1]\n") {
            Err(Error::Range { field, .. }) => assert_eq!(field, "rho"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strict_keys() {
        let dup = parse_config_str("[foliage]\nrho = 0.1\nrho = 0.2\n").unwrap_err().to_string();
        assert!(dup.contains("duplicate"), "{dup}");
        let unknown = parse_config_str("[foliage]\nrhoo = 0.1\n").unwrap_err().to_string();
        assert!(unknown.contains("rhoo"), "{unknown}");
        assert!(parse_config_str("[foliages]\n").is_err());
    }

    #[test]
    fn syntax_error_reports_line() {
        let msg = parse_config_str("[foliage]\nrho = 0.1\nsigma = = 2\n").unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn axis_default_grids() {
        let c = parse_config_str("[sweep]\naxis = \"rho\"\n").unwrap();
        assert_eq!(c.values.len(), 9);
        assert_eq!(c.values[8], 1.0);
        let c = parse_config_str("[sweep]\naxis = \"v_target\"\n").unwrap();
        assert_eq!(c.values, vec![200.0, 400.0, 600.0, 800.0, 1000.0]);
    }

    #[test]
    fn toml_round_trip() {
        let text = "[geometry.ground]\nheight = -0.5\nmaterial = { eps_r = 5.0, kappa = 0.01, mu_s = 0.0 }\n\
                    [sweep]\naxis = \"v_target\"\nvalues = [200.0, 1000.0]\nrealizations = 3\nseed = 9\n";
        let c = parse_config_str(text).unwrap();
        assert_eq!(c.simulation.geometry.ground.unwrap().height, -0.5);
        let again = parse_config_str(&c.to_toml()).unwrap();
        assert_eq!(again, c);
    }
}
