//! ASCII OBJ and binary little-endian PLY mesh files.

use std::io::{BufRead, Write};

use super::TriMesh;
use crate::{Error, Result, Vec3};

/// Writes `v`/`f` records with 1-based indices. Coordinates use the shortest
/// representation that parses back to the same `f64`.
pub fn write_obj<W: Write>(mesh: &TriMesh, mut w: W) -> Result<()> {
    writeln!(w, "# {} vertices, {} faces", mesh.vertex_count(), mesh.face_count())?;
    for v in mesh.vertices() {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in mesh.faces() {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

/// Writes the envelope as a `l` wireframe and the soup as faces, in two named
/// groups of one OBJ file.
pub fn write_obj_merged<W: Write>(envelope: &TriMesh, soup: &TriMesh, mut w: W) -> Result<()> {
    writeln!(w, "o envelope_wireframe")?;
    for v in envelope.vertices() {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for (a, b) in envelope.edges() {
        writeln!(w, "l {} {}", a + 1, b + 1)?;
    }
    let offset = envelope.vertex_count() as u32 + 1;
    writeln!(w, "o scatterers")?;
    for v in soup.vertices() {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in soup.faces() {
        writeln!(w, "f {} {} {}", f[0] + offset, f[1] + offset, f[2] + offset)?;
    }
    Ok(())
}

/// Reads triangle faces from an OBJ file. Accepts `f a/b/c` index forms and
/// negative (relative) indices; ignores every other record.
pub fn read_obj<R: BufRead>(r: R) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let mut it = line.split_whitespace();
        let bad = |what: &str| Error::InvalidMesh(format!("OBJ line {}: {what}", lineno + 1));
        match it.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    *slot = it
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("malformed vertex"))?;
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<u32> = it
                    .map(|tok| {
                        let head = tok.split('/').next().unwrap_or("");
                        let i: i64 = head.parse().map_err(|_| bad("malformed face index"))?;
                        let resolved = if i < 0 { vertices.len() as i64 + i } else { i - 1 };
                        u32::try_from(resolved).map_err(|_| bad("face index out of range"))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(bad("only triangular faces are supported"));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

/// Binary little-endian PLY with `double` vertex coordinates and `uint`
/// face indices.
pub fn write_ply<W: Write>(mesh: &TriMesh, mut w: W) -> Result<()> {
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
         property double x\nproperty double y\nproperty double z\n\
         element face {}\nproperty list uchar uint vertex_indices\nend_header\n",
        mesh.vertex_count(),
        mesh.face_count()
    )?;
    for v in mesh.vertices() {
        for c in [v.x, v.y, v.z] {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    for f in mesh.faces() {
        w.write_all(&[3u8])?;
        for i in f {
            w.write_all(&i.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads back files produced by [`write_ply`].
pub fn read_ply(bytes: &[u8]) -> Result<TriMesh> {
    let bad = |what: &str| Error::InvalidMesh(format!("PLY: {what}"));
    let marker = b"end_header\n";
    let end = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| bad("missing end_header"))?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not UTF-8"))?;
    if !header.contains("format binary_little_endian 1.0") {
        return Err(bad("unsupported format"));
    }
    let count = |element: &str| -> Result<usize> {
        header
            .lines()
            .find_map(|l| l.strip_prefix(&format!("element {element} ")))
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| bad("missing element count"))
    };
    let (nv, nf) = (count("vertex")?, count("face")?);
    let mut body = &bytes[end + marker.len()..];
    let mut take = |n: usize| -> Result<&[u8]> {
        if body.len() < n {
            return Err(bad("truncated body"));
        }
        let (head, rest) = body.split_at(n);
        body = rest;
        Ok(head)
    };
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let mut c = [0.0; 3];
        for slot in &mut c {
            *slot = f64::from_le_bytes(take(8)?.try_into().unwrap());
        }
        vertices.push(Vec3::new(c[0], c[1], c[2]));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        if take(1)?[0] != 3 {
            return Err(bad("non-triangular face"));
        }
        let mut f = [0u32; 3];
        for slot in &mut f {
            *slot = u32::from_le_bytes(take(4)?.try_into().unwrap());
        }
        faces.push(f);
    }
    TriMesh::new(vertices, faces)
}
