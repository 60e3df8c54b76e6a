//! Wavefront OBJ subset: `v` and `f` records. Polygons are fan-triangulated;
//! normals, texture coordinates, groups and materials are ignored.

use std::path::Path;

use crate::error::MeshError;
use crate::geometry::Vec3;
use crate::mesh::TriMesh;

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh, MeshError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_obj(&text, &path.display().to_string())
}

/// Parses OBJ text. `origin` names the source in error messages.
pub fn parse_obj(text: &str, origin: &str) -> Result<TriMesh, MeshError> {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    let err = |line: usize, message: String| MeshError::Parse {
        path: origin.to_string(),
        line,
        message,
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let coords: Vec<&str> = parts.collect();
                if coords.len() < 3 || coords.len() > 4 {
                    return Err(err(
                        line_no,
                        format!("vertex needs 3 coordinates, got {}", coords.len()),
                    ));
                }
                let mut xyz = [0.0; 3];
                for (slot, s) in xyz.iter_mut().zip(&coords) {
                    *slot = s
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(line_no, format!("bad coordinate `{s}`")))?;
                }
                vertices.push(Vec3::from(xyz));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for token in parts {
                    let index_str = token.split('/').next().unwrap_or("");
                    let i: i64 = index_str
                        .parse()
                        .map_err(|_| err(line_no, format!("bad face index `{token}`")))?;
                    let n = vertices.len() as i64;
                    let resolved = match i {
                        0 => return Err(err(line_no, "face index 0 is invalid".into())),
                        i if i > 0 => i - 1,
                        i => n + i,
                    };
                    if resolved < 0 || resolved >= n {
                        return Err(err(
                            line_no,
                            format!("face index {i} out of range ({n} vertices so far)"),
                        ));
                    }
                    poly.push(resolved as u32);
                }
                if poly.len() < 3 {
                    return Err(err(
                        line_no,
                        format!("face needs at least 3 vertices, got {}", poly.len()),
                    ));
                }
                for k in 1..poly.len() - 1 {
                    triangles.push([poly[0], poly[k], poly[k + 1]]);
                }
            }
            _ => {}
        }
    }

    if triangles.is_empty() {
        return Err(MeshError::EmptyMesh(format!("{origin}: no faces")));
    }
    TriMesh::new(vertices, triangles).map_err(|e| match e {
        MeshError::EmptyMesh(m) => MeshError::EmptyMesh(format!("{origin}: {m}")),
        other => other,
    })
}
