//! Indexed triangle meshes shared by the envelope and the scatterer soup.

pub mod io;

use std::collections::HashMap;

use crate::{Error, Result, Vec3};

/// Faces with an area at or below this are rejected as degenerate, m^2.
pub const MIN_FACE_AREA: f64 = 1e-12;

/// Indexed triangle mesh. Vertices are in meters, faces index into `vertices`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
}

/// Edge incidence summary of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeReport {
    pub edges: usize,
    /// Undirected edges not shared by exactly two faces.
    pub offending: usize,
    /// Directed edges used by more than one face (inconsistent winding).
    pub orientation_conflicts: usize,
}

impl TriMesh {
    /// Builds a mesh, rejecting out-of-range indices and degenerate faces.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let mesh = Self { vertices, faces };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Skips validation; callers guarantee the face invariants.
    pub(crate) fn from_parts(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Self {
        Self { vertices, faces }
    }

    pub fn empty() -> Self {
        Self { vertices: Vec::new(), faces: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if let Some(v) = self.vertices.iter().find(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("non-finite vertex {v:?}")));
        }
        for (i, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&k| k as usize >= n) {
                return Err(Error::InvalidMesh(format!("face {i} indexes past {n} vertices: {f:?}")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {i} repeats a vertex: {f:?}")));
            }
            let a = self.face_area(i);
            if !(a > MIN_FACE_AREA) {
                return Err(Error::InvalidMesh(format!("face {i} is degenerate (area {a:e})")));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub(crate) fn vertices_mut(&mut self) -> &mut [Vec3] {
        &mut self.vertices
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Unit normal following the face winding.
    pub fn face_normal(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.triangle(face);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn edge_report(&self) -> EdgeReport {
        let mut undirected: HashMap<(u32, u32), u32> = HashMap::new();
        let mut directed: HashMap<(u32, u32), u32> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *undirected.entry((a.min(b), a.max(b))).or_default() += 1;
                *directed.entry((a, b)).or_default() += 1;
            }
        }
        EdgeReport {
            edges: undirected.len(),
            offending: undirected.values().filter(|&&c| c != 2).count(),
            orientation_conflicts: directed.values().filter(|&&c| c > 1).count(),
        }
    }

    /// Every edge shared by exactly two faces with opposite winding.
    pub fn is_watertight(&self) -> bool {
        let r = self.edge_report();
        !self.faces.is_empty() && r.offending == 0 && r.orientation_conflicts == 0
    }

    /// V - E + F.
    pub fn euler_characteristic(&self) -> i64 {
        let e = self.edge_report().edges;
        self.vertices.len() as i64 - e as i64 + self.faces.len() as i64
    }

    /// Sum of signed tetrahedra spanned by each face and the origin.
    pub fn signed_volume(&self) -> f64 {
        (0..self.faces.len())
            .map(|i| {
                let [a, b, c] = self.triangle(i);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Enclosed volume of a closed, consistently wound mesh.
    pub fn volume(&self) -> Result<f64> {
        let r = self.edge_report();
        if self.faces.is_empty() || r.offending > 0 {
            return Err(Error::NotWatertight { offending_edges: r.offending.max(1) });
        }
        if r.orientation_conflicts > 0 {
            return Err(Error::InvalidMesh(format!(
                "{} directed edge(s) with inconsistent winding",
                r.orientation_conflicts
            )));
        }
        Ok(self.signed_volume().abs())
    }

    /// Volume-weighted centroid of a closed mesh.
    pub fn volume_centroid(&self) -> Result<Vec3> {
        let v = self.signed_volume();
        if v.abs() <= 1e-12 {
            return Err(Error::DegenerateVolume(v));
        }
        let weighted: Vec3 = (0..self.faces.len())
            .map(|i| {
                let [a, b, c] = self.triangle(i);
                (a + b + c) * (a.dot(&b.cross(&c)) / 24.0)
            })
            .sum();
        Ok(weighted / v)
    }

    /// Axis-aligned bounding box `(min, max)`; `None` for a mesh without vertices.
    pub fn aabb(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v))))
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + offset).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Applies `f` to every vertex, keeping the faces.
    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self { vertices: self.vertices.iter().map(f).collect(), faces: self.faces.clone() }
    }

    /// Undirected edges, each listed once with the smaller index first.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut e: Vec<(u32, u32)> = self
            .faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| (f[k].min(f[(k + 1) % 3]), f[k].max(f[(k + 1) % 3]))))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }
}
