//! Multipath search: direct path, specular chains found by ray launching and
//! confirmed with the image method, and single-bounce diffuse scattering.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::accel::{Accel, Ray, Triangle, MIN_HIT_DISTANCE};
use super::fresnel::{fresnel_reflection, Material, Reflection};
use super::ordered_map;
use crate::rng::RandomStream;
use crate::scatter::{random_rotation, ScattererSoup};
use crate::{Error, Result, Vec3, SPEED_OF_LIGHT};

/// Upper bound on `max_depth`.
pub const MAX_PATH_DEPTH: u32 = 25;

/// Half-width of the square that stands in for an infinite ground plane, m.
const GROUND_HALF_WIDTH: f64 = 1.0e4;

const RAYS_PER_CHUNK: usize = 2048;

type CVec3 = nalgebra::Vector3<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundPlane {
    pub height: f64,
    pub material: Material,
}

/// Static propagation scene. Face ids are the indices of `triangles`; a
/// ground plane, when present, appends two faces after them.
#[derive(Debug, Clone)]
pub struct Scene {
    triangles: Vec<Triangle>,
    /// Material index per face: 0 = scatterer material, 1 = ground.
    face_material: Vec<u8>,
    materials: [Material; 2],
    tx: Vec3,
    rx: Vec3,
    carrier_hz: f64,
    ground: Option<GroundPlane>,
}

impl Scene {
    pub fn new(triangles: Vec<Triangle>, tx: Vec3, rx: Vec3, material: Material, carrier_hz: f64) -> Result<Self> {
        if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
            return Err(Error::range("carrier_hz", format!("must be > 0, got {carrier_hz}")));
        }
        if (tx - rx).norm() < MIN_HIT_DISTANCE {
            return Err(Error::range("rx_position", "TX and RX coincide"));
        }
        let face_material = vec![0; triangles.len()];
        Ok(Self { triangles, face_material, materials: [material, material], tx, rx, carrier_hz, ground: None })
    }

    pub fn from_soup(soup: &ScattererSoup, tx: Vec3, rx: Vec3, material: Material, carrier_hz: f64) -> Result<Self> {
        Self::new(soup.triangles(), tx, rx, material, carrier_hz)
    }

    pub fn with_ground(mut self, ground: GroundPlane) -> Self {
        if self.ground.is_some() {
            self.triangles.truncate(self.triangles.len() - 2);
            self.face_material.truncate(self.face_material.len() - 2);
        }
        let mid = (self.tx + self.rx) / 2.0;
        let h = GROUND_HALF_WIDTH;
        let z = ground.height;
        let c = |dx: f64, dy: f64| Vec3::new(mid.x + dx, mid.y + dy, z);
        self.triangles.push(Triangle::new(c(-h, -h), c(h, -h), c(h, h)));
        self.triangles.push(Triangle::new(c(-h, -h), c(h, h), c(-h, h)));
        self.face_material.extend_from_slice(&[1, 1]);
        self.materials[1] = ground.material;
        self.ground = Some(ground);
        self
    }

    pub fn tx(&self) -> Vec3 {
        self.tx
    }
    pub fn rx(&self) -> Vec3 {
        self.rx
    }
    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }
    pub fn material(&self) -> &Material {
        &self.materials[0]
    }
    pub fn ground(&self) -> Option<&GroundPlane> {
        self.ground.as_ref()
    }
    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// TX and RX exchanged.
    pub fn swapped(&self) -> Self {
        Self { tx: self.rx, rx: self.tx, ..self.clone() }
    }

    fn face_material(&self, face: u32) -> &Material {
        &self.materials[self.face_material[face as usize] as usize]
    }

    /// Free-space amplitude `lambda / (4 pi d)`.
    pub fn free_space_amplitude(&self, distance: f64) -> f64 {
        self.wavelength() / (4.0 * PI * distance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TracerConfig {
    pub n_candidate_rays: usize,
    pub max_depth: u32,
    /// Reception sphere radius is `rx_sphere_growth * unfolded_length * mean_ray_spacing`.
    pub rx_sphere_growth: f64,
    pub enable_diffuse: bool,
}

impl Default for TracerConfig {
    fn default() -> Self {
        Self::desk_scale()
    }
}

impl TracerConfig {
    /// 1e5 rays, depth 8.
    pub fn desk_scale() -> Self {
        Self { n_candidate_rays: 100_000, max_depth: 8, rx_sphere_growth: 1.0, enable_diffuse: true }
    }

    /// 2e6 rays, depth 25.
    pub fn full_scale() -> Self {
        Self { n_candidate_rays: 2_000_000, max_depth: 25, ..Self::desk_scale() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_candidate_rays == 0 {
            return Err(Error::range("n_candidate_rays", "must be >= 1"));
        }
        if !(1..=MAX_PATH_DEPTH).contains(&self.max_depth) {
            return Err(Error::range("max_depth", format!("must be in 1..={MAX_PATH_DEPTH}, got {}", self.max_depth)));
        }
        if !(self.rx_sphere_growth.is_finite() && self.rx_sphere_growth > 0.0) {
            return Err(Error::range("rx_sphere_growth", "must be > 0"));
        }
        Ok(())
    }

    /// Mean angular spacing of the launch lattice, `sqrt(4 pi / N)` rad.
    pub fn ray_spacing(&self) -> f64 {
        (4.0 * PI / self.n_candidate_rays as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Los,
    Reflected,
    Scattered,
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathKind::Los => "los",
            PathKind::Reflected => "reflected",
            PathKind::Scattered => "scattered",
        })
    }
}

/// One propagation path from TX to RX.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathComponent {
    /// Propagation delay, s.
    pub delay: f64,
    /// Complex amplitude of the received field relative to the transmitted
    /// one; isotropic unit-gain antennas.
    pub amplitude: Complex64,
    pub interaction_count: u32,
    pub kind: PathKind,
    /// Face ids in interaction order, TX side first. The diffuse face of a
    /// scattered path is the first or the last entry.
    pub faces: Vec<u32>,
}

impl MultipathComponent {
    pub fn power(&self) -> f64 {
        self.amplitude.norm_sqr()
    }

    pub fn path_length(&self) -> f64 {
        self.delay * SPEED_OF_LIGHT
    }
}

/// Polarization of the vertical-dipole-like antenna for propagation direction `d`.
fn antenna_polarization(d: &Vec3) -> Vec3 {
    let z = Vec3::z();
    let p = z - d * z.dot(d);
    if p.norm() < 1e-9 {
        let x = Vec3::x();
        (x - d * x.dot(d)).normalize()
    } else {
        p.normalize()
    }
}

fn complexify(v: &Vec3) -> CVec3 {
    v.map(|c| Complex64::new(c, 0.0))
}

fn cdot(e: &CVec3, v: &Vec3) -> Complex64 {
    e.x * v.x + e.y * v.y + e.z * v.z
}

/// Specular reflection of field `e` arriving along `d_in` and leaving along
/// `d_out` at a surface with normal `n`.
fn reflect_field(e: &CVec3, d_in: &Vec3, d_out: &Vec3, n: &Vec3, r: &Reflection) -> CVec3 {
    let mut s = d_in.cross(n);
    if s.norm() < 1e-12 {
        s = antenna_polarization(d_in).cross(d_in);
    }
    let s = s.normalize();
    let p_in = s.cross(d_in);
    let p_out = s.cross(d_out);
    complexify(&s) * (r.te * cdot(e, &s)) + complexify(&p_out) * (r.tm * cdot(e, &p_in))
}

fn mirror_point(p: &Vec3, plane_point: &Vec3, n: &Vec3) -> Vec3 {
    p - n * (2.0 * (p - plane_point).dot(n))
}

/// Fibonacci lattice direction `i` of `n`.
fn fibonacci_direction(i: usize, n: usize) -> Vec3 {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = golden_angle * i as f64;
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

struct RayOutcome {
    candidates: Vec<Vec<u32>>,
    diffuse: Vec<MultipathComponent>,
}

struct Tracer<'a> {
    scene: &'a Scene,
    config: &'a TracerConfig,
    accel: Accel,
    wavelength: f64,
    wavenumber: f64,
}

impl Tracer<'_> {
    fn visible(&self, from: &Vec3, to: &Vec3) -> bool {
        let d = to - from;
        let len = d.norm();
        if len <= 2.0 * MIN_HIT_DISTANCE {
            return true;
        }
        let ray = Ray::new(*from, d / len);
        !self.accel.occluded(&ray, MIN_HIT_DISTANCE, len - MIN_HIT_DISTANCE, |_| false)
    }

    fn line_of_sight(&self) -> Option<MultipathComponent> {
        let (tx, rx) = (self.scene.tx, self.scene.rx);
        if !self.visible(&tx, &rx) {
            return None;
        }
        let d = (rx - tx).norm();
        let amplitude = Complex64::from_polar(self.scene.free_space_amplitude(d), -self.wavenumber * d);
        Some(MultipathComponent { delay: d / SPEED_OF_LIGHT, amplitude, interaction_count: 0, kind: PathKind::Los, faces: Vec::new() })
    }

    /// Follows one ray from `from`. Forward launches (TX to RX) propose
    /// specular candidates and emit every diffuse hit; reverse launches (RX
    /// to TX) emit only diffuse hits reached after at least one bounce, which
    /// are the diffuse-then-specular paths of the forward link.
    fn launch(&self, dir: Vec3, reverse: bool) -> RayOutcome {
        let scene = self.scene;
        let (from, rx) = if reverse { (scene.rx, scene.tx) } else { (scene.tx, scene.rx) };
        let spacing = self.config.ray_spacing();
        let inv_n = 1.0 / self.config.n_candidate_rays as f64;
        let mut out = RayOutcome { candidates: Vec::new(), diffuse: Vec::new() };

        let mut ray = Ray::new(from, dir);
        let mut field = complexify(&antenna_polarization(&dir));
        let mut unfolded = 0.0;
        let mut phase = 0.0;
        let mut faces: Vec<u32> = Vec::new();

        for bounce in 0..=self.config.max_depth {
            let hit = if bounce < self.config.max_depth {
                self.accel.nearest(&ray, MIN_HIT_DISTANCE, f64::INFINITY)
            } else {
                None
            };
            let seg_len = hit.map_or(f64::INFINITY, |h| h.t);

            if bounce > 0 && !reverse {
                let along = (rx - ray.origin).dot(&ray.dir).clamp(0.0, seg_len);
                let miss = (ray.at(along) - rx).norm();
                if miss <= self.config.rx_sphere_growth * (unfolded + along) * spacing {
                    out.candidates.push(faces.clone());
                }
            }

            let Some(hit) = hit else { break };
            let tri = &self.accel.triangles()[hit.face as usize];
            let material = scene.face_material(hit.face);
            let at = ray.at(hit.t);
            let mut n = tri.normal();
            if n.dot(&ray.dir) > 0.0 {
                n = -n;
            }
            let cos_in = -ray.dir.dot(&n);
            let refl = fresnel_reflection(cos_in, material, scene.carrier_hz);
            unfolded += hit.t;
            let tube_power = field.norm_squared() * inv_n;

            if self.config.enable_diffuse && material.mu_s() > 0.0 && tube_power > 0.0 && !(reverse && bounce == 0) {
                let to_rx = rx - at;
                let d2 = to_rx.norm();
                let w = to_rx / d2;
                let cos_out = w.dot(&n);
                if cos_out > 0.0 && self.visible(&at, &rx) {
                    let refl_out = fresnel_reflection(cos_out, material, scene.carrier_hz);
                    let weight = material.mu_s().powi(2) * refl.rms_magnitude() * refl_out.rms_magnitude();
                    let aperture = self.wavelength * self.wavelength / (4.0 * PI);
                    let power = tube_power * weight * cos_out / (PI * d2 * d2) * aperture;
                    let length = unfolded + d2;
                    let magnitude = power.sqrt().min(scene.free_space_amplitude(length));
                    let total_phase = phase + refl.te.arg() - self.wavenumber * length;
                    let mut path = faces.clone();
                    path.push(hit.face);
                    if reverse {
                        path.reverse();
                    }
                    out.diffuse.push(MultipathComponent {
                        delay: length / SPEED_OF_LIGHT,
                        amplitude: Complex64::from_polar(magnitude, total_phase),
                        interaction_count: path.len() as u32,
                        kind: PathKind::Scattered,
                        faces: path,
                    });
                }
            }

            let out_dir = ray.dir - n * (2.0 * ray.dir.dot(&n));
            field = reflect_field(&field, &ray.dir, &out_dir, &n, &refl) * Complex64::new(material.specular_factor(), 0.0);
            phase += refl.te.arg();
            faces.push(hit.face);
            if field.norm_squared() == 0.0 {
                break;
            }
            ray = Ray::new(at, out_dir.normalize());
        }
        out
    }

    /// Exact specular path through `faces` by successive TX images, or `None`
    /// if the geometry does not admit it or a segment is blocked.
    fn specular_path(&self, faces: &[u32]) -> Option<MultipathComponent> {
        let scene = self.scene;
        let tris = self.accel.triangles();
        let mut images = Vec::with_capacity(faces.len() + 1);
        images.push(scene.tx);
        for &f in faces {
            let t = &tris[f as usize];
            images.push(mirror_point(images.last().unwrap(), &t.v0, &t.normal()));
        }
        let mut points = vec![Vec3::zeros(); faces.len()];
        let mut target = scene.rx;
        for j in (0..faces.len()).rev() {
            let t = &tris[faces[j] as usize];
            let n = t.normal();
            let source = images[j + 1];
            let span = target - source;
            let denom = n.dot(&span);
            if denom.abs() < 1e-15 {
                return None;
            }
            let s = n.dot(&(t.v0 - source)) / denom;
            if !(s > 0.0 && s < 1.0) {
                return None;
            }
            let p = source + span * s;
            if !inside_triangle(t, &p) {
                return None;
            }
            points[j] = p;
            target = p;
        }

        let mut nodes = Vec::with_capacity(faces.len() + 2);
        nodes.push(scene.tx);
        nodes.extend_from_slice(&points);
        nodes.push(scene.rx);
        let mut length = 0.0;
        let mut dirs = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            let seg = w[1] - w[0];
            let len = seg.norm();
            if len < 2.0 * MIN_HIT_DISTANCE || !self.visible(&w[0], &w[1]) {
                return None;
            }
            length += len;
            dirs.push(seg / len);
        }

        let mut field = complexify(&antenna_polarization(&dirs[0]));
        for (j, &f) in faces.iter().enumerate() {
            let (d_in, d_out) = (dirs[j], dirs[j + 1]);
            let n = tris[f as usize].normal();
            let material = scene.face_material(f);
            let refl = fresnel_reflection(d_in.dot(&n).abs(), material, scene.carrier_hz);
            field = reflect_field(&field, &d_in, &d_out, &n, &refl) * Complex64::new(material.specular_factor(), 0.0);
        }
        let received = cdot(&field, &antenna_polarization(dirs.last().unwrap()));
        let amplitude = received
            * Complex64::from_polar(scene.free_space_amplitude(length), -self.wavenumber * length);
        Some(MultipathComponent {
            delay: length / SPEED_OF_LIGHT,
            amplitude,
            interaction_count: faces.len() as u32,
            kind: PathKind::Reflected,
            faces: faces.to_vec(),
        })
    }
}

fn inside_triangle(t: &Triangle, p: &Vec3) -> bool {
    let n = t.e1.cross(&t.e2);
    let nn = n.norm_squared();
    let w = p - t.v0;
    let u = w.cross(&t.e2).dot(&n) / nn;
    let v = t.e1.cross(&w).dot(&n) / nn;
    u >= 0.0 && v >= 0.0 && u + v <= 1.0
}

/// Finds the multipath components between TX and RX.
///
/// * the direct path, when unobstructed;
/// * specular chains up to `max_depth` bounces: `n_candidate_rays` rays are
///   launched on a randomly rotated Fibonacci lattice, any segment passing
///   inside the growing reception sphere proposes its face sequence, and
///   each distinct sequence is recomputed exactly with the image method;
/// * diffuse contributions: every ray hit that sees the RX adds a Lambertian
///   path carrying `mu_s^2 |G_in| |G_out|` of the ray-tube power. The same
///   lattice launched from the RX supplies the paths whose single diffuse
///   interaction comes before the specular bounces, so both orderings are
///   present and the scattered power is reciprocal.
///
/// Specular amplitudes carry Fresnel TE/TM factors and `sqrt(1 - mu_s^2)` per
/// bounce. The result is sorted by delay, then kind, then face sequence.
pub fn trace(scene: &Scene, config: &TracerConfig, rng: &mut RandomStream) -> Result<Vec<MultipathComponent>> {
    config.validate()?;
    let wavelength = scene.wavelength();
    let tracer = Tracer {
        scene,
        config,
        accel: Accel::new(scene.triangles.clone()),
        wavelength,
        wavenumber: 2.0 * PI / wavelength,
    };
    let lattice = random_rotation(rng);
    let mut mpcs: Vec<MultipathComponent> = tracer.line_of_sight().into_iter().collect();

    if !tracer.accel.is_empty() {
        let n = config.n_candidate_rays;
        let chunks = n.div_ceil(RAYS_PER_CHUNK);
        let passes: &[bool] = if config.enable_diffuse { &[false, true] } else { &[false] };
        let outcomes = ordered_map(chunks * passes.len(), |c| {
            let reverse = passes[c / chunks];
            let c = c % chunks;
            let range = c * RAYS_PER_CHUNK..((c + 1) * RAYS_PER_CHUNK).min(n);
            let mut candidates = Vec::new();
            let mut diffuse = Vec::new();
            for i in range {
                let mut o = tracer.launch(lattice.apply(&fibonacci_direction(i, n)).normalize(), reverse);
                candidates.append(&mut o.candidates);
                diffuse.append(&mut o.diffuse);
            }
            (candidates, diffuse)
        });
        let mut keys = BTreeSet::new();
        for (candidates, diffuse) in outcomes {
            keys.extend(candidates);
            mpcs.extend(diffuse);
        }
        let keys: Vec<Vec<u32>> = keys.into_iter().collect();
        let specular = ordered_map(keys.len(), |k| tracer.specular_path(&keys[k]));
        mpcs.extend(specular.into_iter().flatten());
    }

    mpcs.retain(|m| m.amplitude.norm_sqr() > 0.0);
    if let Some(bad) = mpcs.iter().find(|m| !(m.amplitude.re.is_finite() && m.amplitude.im.is_finite() && m.delay.is_finite())) {
        return Err(Error::NonFiniteAmplitude(format!("{} via faces {:?}", bad.kind, bad.faces)));
    }
    mpcs.sort_by(|a, b| {
        a.delay.total_cmp(&b.delay).then(a.kind.cmp(&b.kind)).then_with(|| a.faces.cmp(&b.faces))
    });
    Ok(mpcs)
}
