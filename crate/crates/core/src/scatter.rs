//! Filling the crown envelope with randomly rotated equilateral triangles.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use rand::Rng;

use crate::mesh::TriMesh;
use crate::params::FoliageParams;
use crate::ray::accel::{Accel, Ray, Triangle};
use crate::rng::{splitmix64, RandomStream};
use crate::{Error, Result, Vec3};

/// Consecutive rejections after which the envelope is treated as degenerate.
pub const REJECTION_BUDGET: u64 = 1_000_000;

/// Equilateral triangle of a given area, centred on the origin in the z = 0 plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrianglePrototype {
    area: f64,
    side: f64,
    local_vertices: [Vec3; 3],
}

impl TrianglePrototype {
    pub fn new(area: f64) -> Result<Self> {
        if !(area.is_finite() && area > 0.0) {
            return Err(Error::range("area", format!("must be > 0, got {area}")));
        }
        let l = (4.0 * area / 3f64.sqrt()).sqrt();
        let r3 = 3f64.sqrt();
        let local_vertices = [
            Vec3::new(0.0, -l / r3, 0.0),
            Vec3::new(l / 2.0, l / (2.0 * r3), 0.0),
            Vec3::new(-l / 2.0, l / (2.0 * r3), 0.0),
        ];
        Ok(Self { area, side: l, local_vertices })
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn local_vertices(&self) -> &[Vec3; 3] {
        &self.local_vertices
    }

    /// Vertices `c + R p_j`.
    pub fn place(&self, rotation: &RotationMatrix, center: Vec3) -> [Vec3; 3] {
        self.local_vertices.map(|p| center + rotation.apply(&p))
    }
}

pub fn triangle_prototype(area: f64) -> Result<TrianglePrototype> {
    TrianglePrototype::new(area)
}

/// Proper rotation, `R^T R = I` and `det R = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    /// Rodrigues' formula `R = I + sin(theta) K + (1 - cos(theta)) K^2` for a
    /// unit `axis` with cross-product matrix `K`.
    pub fn from_axis_angle(axis: &Vec3, theta: f64) -> Self {
        let k = axis.cross_matrix();
        Self(Matrix3::identity() + k * theta.sin() + k * k * (1.0 - theta.cos()))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// `max |R^T R - I|` over entries.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).abs().max()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }
}

/// Haar-uniform rotation: uniform axis on the sphere, angle with density
/// `(1 - cos(theta)) / pi` on `[0, pi]`, assembled with Rodrigues' formula.
pub fn random_rotation(rng: &mut RandomStream) -> RotationMatrix {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let axis = Vec3::new(rho * phi.cos(), rho * phi.sin(), z);
    let theta = haar_angle(rng.random::<f64>());
    RotationMatrix::from_axis_angle(&axis, theta)
}

/// Inverts the angle CDF `(theta - sin(theta)) / pi = u` by bisection.
fn haar_angle(u: f64) -> f64 {
    let target = PI * u;
    let (mut lo, mut hi) = (0.0f64, PI);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mid - mid.sin() < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Point-in-mesh queries by ray parity against a watertight surface.
#[derive(Debug, Clone)]
pub struct Containment {
    accel: Accel,
    lo: Vec3,
    hi: Vec3,
}

const PARITY_ATTEMPTS: u64 = 8;
const GRAZING: f64 = 1e-9;

impl Containment {
    pub fn new(envelope: &TriMesh) -> Result<Self> {
        if !envelope.is_watertight() {
            return Err(Error::NotWatertight { offending_edges: envelope.edge_report().offending.max(1) });
        }
        let (lo, hi) = envelope.aabb().ok_or(Error::Empty("envelope"))?;
        let tris = (0..envelope.face_count()).map(|i| Triangle::from_array(envelope.triangle(i))).collect();
        Ok(Self { accel: Accel::new(tris), lo, hi })
    }

    pub fn aabb(&self) -> (Vec3, Vec3) {
        (self.lo, self.hi)
    }

    /// Odd number of surface crossings along a ray means inside. The ray
    /// direction is drawn from a hash of the query point; hits that graze an
    /// edge or start on the surface trigger a retry with another direction.
    pub fn contains(&self, p: &Vec3) -> bool {
        if (0..3).any(|k| p[k] < self.lo[k] || p[k] > self.hi[k]) {
            return false;
        }
        let mut key = p.iter().fold(0u64, |acc, c| splitmix64(acc ^ c.to_bits()));
        let mut last = false;
        for _ in 0..PARITY_ATTEMPTS {
            key = splitmix64(key);
            let a = splitmix64(key);
            let z = 2.0 * unit_f64(key) - 1.0;
            let phi = 2.0 * PI * unit_f64(a);
            let r = (1.0 - z * z).sqrt();
            let ray = Ray::new(*p, Vec3::new(r * phi.cos(), r * phi.sin(), z));
            let mut crossings = 0u32;
            let mut ambiguous = false;
            self.accel.for_each_hit(&ray, 0.0, f64::INFINITY, |h| {
                crossings += 1;
                if h.t < GRAZING || h.u < GRAZING || h.v < GRAZING || 1.0 - h.u - h.v < GRAZING {
                    ambiguous = true;
                }
            });
            last = crossings % 2 == 1;
            if !ambiguous {
                return last;
            }
        }
        last
    }

    /// Uniform point inside the surface by rejection from the bounding box.
    pub fn sample(&self, rng: &mut RandomStream) -> Result<Vec3> {
        for _ in 0..REJECTION_BUDGET {
            let p = Vec3::new(
                rng.random_range(self.lo.x..=self.hi.x),
                rng.random_range(self.lo.y..=self.hi.y),
                rng.random_range(self.lo.z..=self.hi.z),
            );
            if self.contains(&p) {
                return Ok(p);
            }
        }
        Err(Error::RejectionBudget(REJECTION_BUDGET))
    }
}

fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One uniform draw from the envelope interior.
pub fn sample_point_in_mesh(envelope: &TriMesh, rng: &mut RandomStream) -> Result<Vec3> {
    Containment::new(envelope)?.sample(rng)
}

/// Internal triangles of a crown: a non-watertight mesh plus the triangle
/// centres, which are the uniformly distributed points.
#[derive(Debug, Clone, PartialEq)]
pub struct ScattererSoup {
    mesh: TriMesh,
    centroids: Vec<Vec3>,
}

impl ScattererSoup {
    pub fn empty() -> Self {
        Self { mesh: TriMesh::empty(), centroids: Vec::new() }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn centroids(&self) -> &[Vec3] {
        &self.centroids
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        Self {
            mesh: self.mesh.translated(offset),
            centroids: self.centroids.iter().map(|c| c + offset).collect(),
        }
    }

    pub fn triangles(&self) -> Vec<Triangle> {
        (0..self.mesh.face_count()).map(|i| Triangle::from_array(self.mesh.triangle(i))).collect()
    }
}

/// Places `floor(rho * v_target)` prototype triangles, each with its own
/// uniform rotation (drawn first) and uniform centre inside the envelope.
/// Triangles may stick out of the envelope; only the centres are constrained.
pub fn fill(envelope: &TriMesh, params: &FoliageParams, rng: &mut RandomStream) -> Result<ScattererSoup> {
    let q = params.triangle_count();
    if q == 0 {
        return Ok(ScattererSoup::empty());
    }
    let proto = TrianglePrototype::new(params.area())?;
    let inside = Containment::new(envelope)?;
    let mut vertices = Vec::with_capacity(3 * q);
    let mut faces = Vec::with_capacity(q);
    let mut centroids = Vec::with_capacity(q);
    for i in 0..q as u32 {
        let rotation = random_rotation(rng);
        let center = inside.sample(rng)?;
        vertices.extend_from_slice(&proto.place(&rotation, center));
        faces.push([3 * i, 3 * i + 1, 3 * i + 2]);
        centroids.push(center);
    }
    Ok(ScattererSoup { mesh: TriMesh::from_parts(vertices, faces), centroids })
}
