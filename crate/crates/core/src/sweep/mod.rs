//! Seeded multi-realization sweeps over triangle density or crown volume.
//!
//! A sweep is a list of points (values of the swept parameter) times a
//! number of realizations. Realization `r` of point `p` runs with the seed
//! [`SweepConfig::realization_seed`], so every record can be reproduced on
//! its own with [`simulate`].

pub mod aggregate;
pub mod config;
pub mod realization;
pub mod run;

pub use aggregate::{aggregate, verify_aggregates, write_aggregates, Aggregates, Histogram, Moments, PointStats};
pub use config::{parse_config, parse_config_str, ChannelConfig, GeometryConfig, SeedScheme, SimulationConfig, SweepAxis, SweepConfig};
pub use realization::{build_crown, scene_for, simulate, Realization};
pub use run::{load_result, run_sweep, Manifest, RunOptions, SweepFailure, SweepRecord, SweepResult};
