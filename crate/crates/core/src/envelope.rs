//! Crown envelope: icosphere, Gaussian vertex perturbation, volume rescale.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::mesh::TriMesh;
use crate::params::{FoliageParams, MAX_SUBDIV};
use crate::ray::accel::{Accel, Ray, Triangle};
use crate::rng::RandomStream;
use crate::{Error, Result, Vec3};

const ICOSAHEDRON_FACES: [[u32; 3]; 20] = [
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
];

fn icosahedron_vertices() -> Vec<Vec3> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    [
        (-1.0, t, 0.0), (1.0, t, 0.0), (-1.0, -t, 0.0), (1.0, -t, 0.0),
        (0.0, -1.0, t), (0.0, 1.0, t), (0.0, -1.0, -t), (0.0, 1.0, -t),
        (t, 0.0, -1.0), (t, 0.0, 1.0), (-t, 0.0, -1.0), (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect()
}

/// Unit icosphere with `20 * 4^n` outward-wound faces and `10 * 4^n + 2`
/// vertices on the unit sphere.
///
/// Each level splits every face into four at the edge midpoints; midpoints
/// are shared through an edge-keyed table and projected back to the sphere.
pub fn build_icosphere(n_subdiv: u32) -> Result<TriMesh> {
    if n_subdiv > MAX_SUBDIV {
        return Err(Error::SubdivisionLevel(n_subdiv));
    }
    let mut vertices = icosahedron_vertices();
    let mut faces = ICOSAHEDRON_FACES.to_vec();
    for _ in 0..n_subdiv {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::with_capacity(faces.len() * 3 / 2);
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Vec3>| -> u32 {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m = (vertices[a as usize] + vertices[b as usize]).normalize();
                vertices.push(m);
                (vertices.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    Ok(TriMesh::from_parts(vertices, faces))
}

/// Enclosed volume via signed tetrahedra against the origin.
pub fn mesh_volume(mesh: &TriMesh) -> Result<f64> {
    mesh.volume()
}

/// Displaces every vertex by an independent `N(0, sigma^2 I)` draw.
pub fn perturb(mesh: &TriMesh, sigma: f64, rng: &mut RandomStream) -> Result<TriMesh> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::range("sigma", format!("must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(mesh.clone());
    }
    let mut out = mesh.clone();
    for v in out.vertices_mut() {
        let d = Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        *v += d * sigma;
    }
    Ok(out)
}

/// Scales all vertices by `s = (v_target / V0)^(1/3)`; returns the mesh and `s`.
pub fn scale_to_volume(mesh: &TriMesh, v_target: f64) -> Result<(TriMesh, f64)> {
    if !(v_target.is_finite() && v_target > 0.0) {
        return Err(Error::range("v_target", format!("must be > 0, got {v_target}")));
    }
    let v0 = mesh.volume()?;
    if v0 <= 1e-12 {
        return Err(Error::DegenerateVolume(v0));
    }
    let s = (v_target / v0).cbrt();
    if s == 1.0 {
        return Ok((mesh.clone(), s));
    }
    Ok((mesh.map_vertices(|v| v * s), s))
}

/// Icosphere, perturbation and volume rescale in that order.
pub fn generate_envelope(params: &FoliageParams, rng: &mut RandomStream) -> Result<TriMesh> {
    let sphere = build_icosphere(params.n_subdiv())?;
    let bumpy = perturb(&sphere, params.sigma(), rng)?;
    let (envelope, _) = scale_to_volume(&bumpy, params.v_target())?;
    envelope.validate()?;
    if params.sigma() > 0.0 {
        let crossings = self_intersecting_edges(&envelope);
        if crossings > 0 {
            log::warn!(
                "perturbed envelope self-intersects ({crossings} edge/face crossings, sigma = {})",
                params.sigma()
            );
        }
    }
    Ok(envelope)
}

/// Number of mesh edges that pass through a face not incident to them.
/// Zero for an embedded surface.
pub fn self_intersecting_edges(mesh: &TriMesh) -> usize {
    let triangles: Vec<Triangle> = (0..mesh.face_count()).map(|i| Triangle::from_array(mesh.triangle(i))).collect();
    let accel = Accel::new(triangles);
    let faces = mesh.faces();
    mesh.edges()
        .into_iter()
        .filter(|&(a, b)| {
            let (pa, pb) = (mesh.vertices()[a as usize], mesh.vertices()[b as usize]);
            let len = (pb - pa).norm();
            let ray = Ray::new(pa, (pb - pa) / len);
            let mut crossed = false;
            accel.for_each_hit(&ray, 0.0, len, |hit| {
                let f = faces[hit.face as usize];
                if !f.contains(&a) && !f.contains(&b) {
                    crossed = true;
                }
            });
            crossed
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stage};

    #[test]
    fn icosphere_counts_follow_closed_form() {
        for n in 0..=4u32 {
            let m = build_icosphere(n).unwrap();
            let p = 4usize.pow(n);
            assert_eq!(m.vertex_count(), 10 * p + 2, "n = {n}");
            assert_eq!(m.face_count(), 20 * p, "n = {n}");
            assert!(m.is_watertight());
            assert_eq!(m.euler_characteristic(), 2);
            let worst = m.vertices().iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-12, "n = {n}: {worst}");
            assert!(m.signed_volume() > 0.0, "outward winding");
            m.validate().unwrap();
        }
    }

    #[test]
    fn icosphere_level_out_of_range() {
        assert!(matches!(build_icosphere(9), Err(Error::SubdivisionLevel(9))));
    }

    #[test]
    fn icosphere_volume_approaches_sphere() {
        let v = mesh_volume(&build_icosphere(3).unwrap()).unwrap();
        let sphere = 4.0 / 3.0 * std::f64::consts::PI;
        assert!((v - sphere).abs() / sphere < 0.01, "{v}");
        assert!(v < sphere, "inscribed polyhedron");
    }

    #[test]
    fn zero_sigma_is_identity() {
        let m = build_icosphere(2).unwrap();
        let p = perturb(&m, 0.0, &mut stream(1, Stage::Envelope)).unwrap();
        assert_eq!(p, m);
    }

    #[test]
    fn scale_law() {
        let cube = crate::mesh::tests::cube(1.0);
        let (scaled, s) = scale_to_volume(&cube, 8.0).unwrap();
        assert!((s - 2.0).abs() < 1e-15);
        assert!((scaled.volume().unwrap() - 8.0).abs() < 1e-12);
        let (same, s) = scale_to_volume(&cube, 1.0).unwrap();
        assert_eq!(s, 1.0);
        assert_eq!(same, cube);
    }

    #[test]
    fn scale_rejects_degenerate() {
        let cube = crate::mesh::tests::cube(1e-5);
        assert!(matches!(scale_to_volume(&cube, 1.0), Err(Error::DegenerateVolume(_))));
        assert!(scale_to_volume(&crate::mesh::tests::cube(1.0), 0.0).is_err());
    }

    #[test]
    fn generated_envelope_hits_target_volume() {
        let p = FoliageParams::new(200.0, 0.1, 2, 0.125, 2.0, 42).unwrap();
        let a = generate_envelope(&p, &mut stream(42, Stage::Envelope)).unwrap();
        let b = generate_envelope(&p, &mut stream(42, Stage::Envelope)).unwrap();
        assert_eq!(a, b);
        assert!((a.volume().unwrap() - 200.0).abs() < 1e-6);
        let c = generate_envelope(&p, &mut stream(43, Stage::Envelope)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unperturbed_envelope_is_a_scaled_sphere() {
        let p = FoliageParams::new(750.0, 0.0, 2, 0.0, 2.0, 1).unwrap();
        let m = generate_envelope(&p, &mut stream(1, Stage::Envelope)).unwrap();
        let r0 = m.vertices()[0].norm();
        assert!(m.vertices().iter().all(|v| (v.norm() - r0).abs() < 1e-9));
    }

    #[test]
    fn large_sigma_still_watertight() {
        let p = FoliageParams::new(1000.0, 1.0, 2, 0.0, 2.0, 5).unwrap();
        let m = generate_envelope(&p, &mut stream(5, Stage::Envelope)).unwrap();
        assert!(m.is_watertight());
        assert_eq!(m.euler_characteristic(), 2);
        assert!((m.volume().unwrap() - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn self_intersection_diagnostic() {
        assert_eq!(self_intersecting_edges(&build_icosphere(2).unwrap()), 0);
        let p = FoliageParams::new(1000.0, 1.0, 2, 0.0, 2.0, 5).unwrap();
        let m = generate_envelope(&p, &mut stream(5, Stage::Envelope)).unwrap();
        assert!(self_intersecting_edges(&m) > 0, "sigma = 1 folds the surface");
    }
}
