//! Browser bindings: crown geometry, a single traced realization and Fresnel
//! curves, each returned as a JSON string for `www/main.js`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use foliage_rt::channel::free_space_path_loss_db;
use foliage_rt::ray::{fresnel_reflection, Material};
use foliage_rt::sweep::{build_crown, simulate, SimulationConfig};
use foliage_rt::{FoliageParams, Result, TriMesh};

/// Flat buffers ready for a canvas renderer.
#[derive(Debug, Serialize)]
pub struct CrownView {
    pub envelope_vertices: Vec<f64>,
    pub envelope_faces: Vec<u32>,
    pub soup_vertices: Vec<f64>,
    pub soup_faces: Vec<u32>,
    pub volume: f64,
    pub n_scatterers: usize,
    pub tx: [f64; 3],
    pub rx: [f64; 3],
}

fn flatten(mesh: &TriMesh) -> (Vec<f64>, Vec<u32>) {
    let v = mesh.vertices().iter().flat_map(|p| [p.x, p.y, p.z]).collect();
    let f = mesh.faces().iter().flatten().copied().collect();
    (v, f)
}

pub fn crown_view(params: &FoliageParams) -> Result<CrownView> {
    let sim = SimulationConfig::default();
    let (envelope, soup) = build_crown(&sim, params)?;
    let (envelope_vertices, envelope_faces) = flatten(&envelope);
    let (soup_vertices, soup_faces) = flatten(soup.mesh());
    Ok(CrownView {
        envelope_vertices,
        envelope_faces,
        soup_vertices,
        soup_faces,
        volume: envelope.volume()?,
        n_scatterers: soup.len(),
        tx: sim.geometry.tx,
        rx: sim.geometry.rx,
    })
}

#[derive(Debug, Serialize)]
pub struct TraceView {
    pub delay_ns: Vec<f64>,
    pub power_dbm: Vec<f64>,
    pub mpc_delay_ns: Vec<f64>,
    pub mpc_power_dbm: Vec<f64>,
    pub rss_dbm: f64,
    pub pl_db: f64,
    pub excess_loss_db: f64,
    pub drms_ns: f64,
    pub n_mpcs: usize,
}

pub fn trace_view(params: &FoliageParams, n_rays: usize) -> Result<TraceView> {
    let mut sim = SimulationConfig::default();
    sim.tracer.n_candidate_rays = n_rays;
    let r = simulate(&sim, params)?;
    let floor = r.pdp.peak() * 1e-6;
    let (delay_ns, power_dbm) =
        r.pdp.grid.delays().zip(&r.pdp.power).map(|(t, p)| (t * 1e9, 10.0 * p.max(floor).log10())).unzip();
    let fspl = free_space_path_loss_db(sim.geometry.distance(), sim.geometry.carrier_hz);
    Ok(TraceView {
        delay_ns,
        power_dbm,
        mpc_delay_ns: r.mpcs.iter().map(|m| m.delay * 1e9).collect(),
        mpc_power_dbm: r.mpcs.iter().map(|m| 10.0 * m.power().log10()).collect(),
        rss_dbm: r.path_loss.rss_dbm,
        pl_db: r.path_loss.pl_db,
        excess_loss_db: r.path_loss.pl_db - fspl,
        drms_ns: r.drms * 1e9,
        n_mpcs: r.mpcs.len(),
    })
}

#[derive(Debug, Serialize)]
pub struct FresnelView {
    pub angle_deg: Vec<f64>,
    pub te: Vec<f64>,
    pub tm: Vec<f64>,
}

pub fn fresnel_view(eps_r: f64, kappa: f64, carrier_hz: f64, n: usize) -> Result<FresnelView> {
    let material = Material::new(eps_r, kappa, 0.0)?;
    let n = n.max(2);
    let angle_deg: Vec<f64> = (0..n).map(|k| 90.0 * k as f64 / (n - 1) as f64).collect();
    let coeffs: Vec<_> =
        angle_deg.iter().map(|a| fresnel_reflection(a.to_radians().cos(), &material, carrier_hz)).collect();
    Ok(FresnelView {
        te: coeffs.iter().map(|r| r.te.norm()).collect(),
        tm: coeffs.iter().map(|r| r.tm.norm()).collect(),
        angle_deg,
    })
}

fn to_json<T: Serialize>(value: Result<T>) -> std::result::Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

fn params(v_target: f64, rho: f64, sigma: f64, seed: u32) -> Result<FoliageParams> {
    let base = FoliageParams::default();
    FoliageParams::new(v_target, sigma, base.n_subdiv(), rho, base.area(), seed as u64)
}

#[wasm_bindgen(js_name = generateCrown)]
pub fn generate_crown(v_target: f64, rho: f64, sigma: f64, seed: u32) -> std::result::Result<String, JsError> {
    to_json(params(v_target, rho, sigma, seed).and_then(|p| crown_view(&p)))
}

#[wasm_bindgen(js_name = traceRealization)]
pub fn trace_realization(v_target: f64, rho: f64, sigma: f64, seed: u32, n_rays: u32) -> std::result::Result<String, JsError> {
    to_json(params(v_target, rho, sigma, seed).and_then(|p| trace_view(&p, n_rays as usize)))
}

#[wasm_bindgen(js_name = fresnelCurve)]
pub fn fresnel_curve(eps_r: f64, kappa: f64, carrier_ghz: f64, n: u32) -> std::result::Result<String, JsError> {
    to_json(fresnel_view(eps_r, kappa, carrier_ghz * 1e9, n as usize))
}
