use crate::channel::{self, ChannelImpulseResponse, PathLoss, PowerDelayProfile};
use crate::envelope::generate_envelope;
use crate::ray::{trace, MultipathComponent, Scene};
use crate::rng::{stream, Stage};
use crate::scatter::{fill, ScattererSoup};
use crate::{FoliageParams, Result, TriMesh};

use super::config::SimulationConfig;

/// Everything produced by one seeded crown realization.
#[derive(Debug, Clone)]
pub struct Realization {
    pub params: FoliageParams,
    /// Envelope and soup, placed in the scene.
    pub envelope: TriMesh,
    pub soup: ScattererSoup,
    pub mpcs: Vec<MultipathComponent>,
    pub cir: ChannelImpulseResponse,
    pub pdp: PowerDelayProfile,
    pub path_loss: PathLoss,
    /// Gated RMS delay spread, s.
    pub drms: f64,
}

/// Builds the envelope and soup of `params` and moves both so that the
/// envelope's volume centroid sits at the configured crown centre.
pub fn build_crown(sim: &SimulationConfig, params: &FoliageParams) -> Result<(TriMesh, ScattererSoup)> {
    let seed = params.seed();
    let envelope = generate_envelope(params, &mut stream(seed, Stage::Envelope))?;
    let soup = fill(&envelope, params, &mut stream(seed, Stage::Fill))?;
    let offset = sim.geometry.crown_center() - envelope.volume_centroid()?;
    Ok((envelope.translated(offset), soup.translated(offset)))
}

pub fn scene_for(sim: &SimulationConfig, soup: &ScattererSoup) -> Result<Scene> {
    let g = &sim.geometry;
    let scene = Scene::from_soup(soup, g.tx(), g.rx(), sim.material, g.carrier_hz)?;
    Ok(match g.ground {
        Some(ground) => scene.with_ground(ground),
        None => scene,
    })
}

/// Runs envelope generation, filling, tracing and channel statistics for the
/// seed carried by `params`.
pub fn simulate(sim: &SimulationConfig, params: &FoliageParams) -> Result<Realization> {
    sim.validate()?;
    let (envelope, soup) = build_crown(sim, params)?;
    let scene = scene_for(sim, &soup)?;
    let mpcs = trace(&scene, &sim.tracer, &mut stream(params.seed(), Stage::Rays))?;
    let ch = &sim.channel;
    let path_loss = channel::path_loss(&mpcs)?;
    let cir = channel::shape_cir(&mpcs, ch.bandwidth_hz, ch.oversample)?;
    let pdp = channel::average_pdp(std::slice::from_ref(&cir))?;
    let drms = channel::rms_delay_spread(&pdp, ch.gate_db)?;
    Ok(Realization { params: *params, envelope, soup, mpcs, cir, pdp, path_loss, drms })
}
