//! Stochastic tree-crown scatterer models and wide-band millimeter-wave
//! channel simulation.
//!
//! The crate is organised along the processing chain:
//!
//! * [`envelope`] builds the crown envelope: a unit icosphere, perturbed with
//!   isotropic Gaussian vertex noise and rescaled to a target volume.
//! * [`scatter`] fills the envelope with randomly rotated, uniformly placed
//!   equilateral triangles (the "scatterer soup").
//! * [`ray`] traces multipath components from TX to RX through the soup with
//!   a shooting-and-bouncing-rays engine over a BVH.
//! * [`channel`] turns multipath components into band-limited impulse
//!   responses, power delay profiles, RMS delay spread and path loss.
//! * [`sweep`] runs seeded multi-realization parameter sweeps and writes the
//!   CSV/JSON outputs.

pub mod channel;
pub mod envelope;
pub mod error;
pub mod mesh;
pub mod params;
pub mod ray;
pub mod rng;
pub mod scatter;
pub mod sweep;

pub use error::{Error, Result};
pub use mesh::TriMesh;
pub use params::FoliageParams;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Point3 = nalgebra::Point3<f64>;
