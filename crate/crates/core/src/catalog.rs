//! Model catalog: OBJ files or procedural primitives, normalized to a unit
//! largest extent and centered on their bounds.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{MeshError, SceneError};
use crate::geometry::Vec3;
use crate::mesh::TriMesh;
use crate::obj::load_obj;

/// Azimuthal segment count for revolved primitives. A multiple of 8 keeps
/// the meshes invariant under 45° turns about z.
pub const LATHE_SEGMENTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Primitive {
    Box { size: [f64; 3] },
    /// Ellipsoid with semi-axes `radii`.
    Sphere { radii: [f64; 3] },
    /// Truncated cone along z; equal radii give a cylinder.
    Cone {
        radius_bottom: f64,
        radius_top: f64,
        height: f64,
    },
    Torus { major: f64, minor: f64 },
    /// Cylinder of `length` capped by hemispheres, along z.
    Capsule { radius: f64, length: f64 },
}

impl Primitive {
    pub fn mesh(&self) -> TriMesh {
        match *self {
            Primitive::Box { size } => box_mesh(Vec3::from(size)),
            Primitive::Sphere { radii } => {
                let rings = 8;
                let profile: Vec<(f64, f64)> = (0..=rings)
                    .map(|i| {
                        let phi = std::f64::consts::PI * i as f64 / rings as f64;
                        (phi.sin(), -phi.cos())
                    })
                    .collect();
                let m = lathe(&profile, false);
                scale_mesh(&m, Vec3::from(radii))
            }
            Primitive::Cone {
                radius_bottom,
                radius_top,
                height,
            } => {
                let mut profile = vec![(0.0, 0.0), (radius_bottom, 0.0)];
                profile.push((radius_top, height));
                if radius_top > 0.0 {
                    profile.push((0.0, height));
                }
                lathe(&profile, false)
            }
            Primitive::Torus { major, minor } => {
                let steps = 8;
                let profile: Vec<(f64, f64)> = (0..steps)
                    .map(|i| {
                        let a = TAU * i as f64 / steps as f64;
                        (major + minor * a.cos(), minor * a.sin())
                    })
                    .collect();
                lathe(&profile, true)
            }
            Primitive::Capsule { radius, length } => {
                let cap = 4;
                let mut profile = Vec::new();
                for i in 0..=cap {
                    let a = std::f64::consts::FRAC_PI_2 * i as f64 / cap as f64;
                    profile.push((radius * a.sin(), -radius * a.cos()));
                }
                for i in 0..=cap {
                    let a = std::f64::consts::FRAC_PI_2 * i as f64 / cap as f64;
                    profile.push((radius * a.cos(), length + radius * a.sin()));
                }
                lathe(&profile, false)
            }
        }
    }
}

fn box_mesh(size: Vec3) -> TriMesh {
    let h = size * 0.5;
    let v: Vec<Vec3> = (0..8)
        .map(|i| {
            Vec3::new(
                if i & 1 == 0 { -h.x } else { h.x },
                if i & 2 == 0 { -h.y } else { h.y },
                if i & 4 == 0 { -h.z } else { h.z },
            )
        })
        .collect();
    let quads = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    let tris = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriMesh::new(v, tris).expect("box mesh is valid")
}

/// Revolves a `(radius, z)` profile about the z axis. Points with zero
/// radius become poles. `closed` joins the last profile point to the first.
fn lathe(profile: &[(f64, f64)], closed: bool) -> TriMesh {
    let seg = LATHE_SEGMENTS;
    let mut vertices = Vec::new();
    // (first vertex index, is_pole)
    let mut rings: Vec<(u32, bool)> = Vec::new();
    for &(r, z) in profile {
        let start = vertices.len() as u32;
        if r == 0.0 {
            vertices.push(Vec3::new(0.0, 0.0, z));
            rings.push((start, true));
        } else {
            for k in 0..seg {
                let a = TAU * k as f64 / seg as f64;
                vertices.push(Vec3::new(r * a.cos(), r * a.sin(), z));
            }
            rings.push((start, false));
        }
    }
    let idx = |ring: (u32, bool), k: usize| -> u32 {
        if ring.1 {
            ring.0
        } else {
            ring.0 + (k % seg) as u32
        }
    };
    let mut tris = Vec::new();
    let n = rings.len();
    let pairs = if closed { n } else { n - 1 };
    for i in 0..pairs {
        let (a, b) = (rings[i], rings[(i + 1) % n]);
        for k in 0..seg {
            let (a0, a1, b0, b1) = (idx(a, k), idx(a, k + 1), idx(b, k), idx(b, k + 1));
            if !a.1 {
                tris.push([a0, a1, b1]);
            }
            if !b.1 {
                tris.push([a0, b1, b0]);
            }
        }
    }
    TriMesh::new(vertices, tris).expect("lathe mesh is valid")
}

fn scale_mesh(m: &TriMesh, s: Vec3) -> TriMesh {
    let v = m.vertices().iter().map(|p| p.mul_elem(s)).collect();
    TriMesh::new(v, m.triangles().to_vec()).expect("scaled mesh is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSource {
    ObjFile { path: PathBuf },
    Primitive { primitive: Primitive },
}

#[derive(Debug, Clone)]
pub struct CatalogModel {
    pub id: String,
    pub source: ModelSource,
    /// Normalized: centered on its bounds, largest extent 1 m.
    pub mesh: TriMesh,
}

#[derive(Debug, Clone, Default)]
pub struct ModelCatalog {
    models: Vec<CatalogModel>,
    index: HashMap<String, usize>,
}

impl ModelCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a model, normalizing its mesh. Replaces an existing id.
    pub fn insert(&mut self, id: impl Into<String>, source: ModelSource, mesh: &TriMesh) {
        let id = id.into();
        let model = CatalogModel {
            id: id.clone(),
            source,
            mesh: mesh.normalized(),
        };
        match self.index.get(&id) {
            Some(&i) => self.models[i] = model,
            None => {
                self.index.insert(id, self.models.len());
                self.models.push(model);
            }
        }
    }

    pub fn add_primitive(&mut self, id: impl Into<String>, primitive: Primitive) {
        let mesh = primitive.mesh();
        self.insert(id, ModelSource::Primitive { primitive }, &mesh);
    }

    pub fn add_obj(&mut self, id: impl Into<String>, path: &Path) -> Result<(), MeshError> {
        let mesh = load_obj(path)?;
        self.insert(
            id,
            ModelSource::ObjFile {
                path: path.to_path_buf(),
            },
            &mesh,
        );
        Ok(())
    }

    /// Loads every `*.obj` in `dir` (sorted by file name); ids are file stems.
    pub fn from_obj_dir(dir: &Path) -> Result<Self, MeshError> {
        let entries = std::fs::read_dir(dir).map_err(|source| MeshError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("obj"))
            })
            .collect();
        paths.sort();
        let mut cat = ModelCatalog::new();
        for p in paths {
            let id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            cat.add_obj(id, &p)?;
        }
        if cat.is_empty() {
            return Err(MeshError::EmptyMesh(format!(
                "no .obj files in {}",
                dir.display()
            )));
        }
        Ok(cat)
    }

    /// 25 procedural shapes: five parameterizations each of box, sphere,
    /// cone, torus and capsule.
    pub fn primitives() -> Self {
        let mut cat = ModelCatalog::new();
        let boxes = [
            [1.0, 1.0, 1.0],
            [2.0, 1.0, 0.5],
            [0.4, 0.4, 1.6],
            [1.5, 1.5, 0.3],
            [1.0, 0.6, 0.8],
        ];
        for (i, size) in boxes.into_iter().enumerate() {
            cat.add_primitive(format!("box_{i}"), Primitive::Box { size });
        }
        let spheres = [
            [1.0, 1.0, 1.0],
            [1.0, 1.0, 0.5],
            [0.5, 0.5, 1.0],
            [1.2, 0.7, 0.7],
            [0.8, 1.0, 0.6],
        ];
        for (i, radii) in spheres.into_iter().enumerate() {
            cat.add_primitive(format!("sphere_{i}"), Primitive::Sphere { radii });
        }
        let cones = [(0.5, 0.0, 1.0), (0.5, 0.5, 1.0), (0.5, 0.25, 0.6), (0.3, 0.3, 1.5), (0.6, 0.1, 0.4)];
        for (i, (rb, rt, h)) in cones.into_iter().enumerate() {
            cat.add_primitive(
                format!("cone_{i}"),
                Primitive::Cone {
                    radius_bottom: rb,
                    radius_top: rt,
                    height: h,
                },
            );
        }
        let tori = [(1.0, 0.3), (1.0, 0.5), (1.0, 0.15), (0.8, 0.4), (1.2, 0.2)];
        for (i, (major, minor)) in tori.into_iter().enumerate() {
            cat.add_primitive(format!("torus_{i}"), Primitive::Torus { major, minor });
        }
        let capsules = [(0.3, 1.0), (0.5, 0.5), (0.2, 1.5), (0.4, 0.2), (0.25, 0.8)];
        for (i, (radius, length)) in capsules.into_iter().enumerate() {
            cat.add_primitive(format!("capsule_{i}"), Primitive::Capsule { radius, length });
        }
        cat
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn models(&self) -> &[CatalogModel] {
        &self.models
    }

    pub fn by_index(&self, i: usize) -> &CatalogModel {
        &self.models[i]
    }

    pub fn get(&self, id: &str) -> Result<&CatalogModel, SceneError> {
        self.index
            .get(id)
            .map(|&i| &self.models[i])
            .ok_or_else(|| SceneError::UnknownModel(id.to_string()))
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rotation;

    #[test]
    fn default_catalog_has_25_normalized_models() {
        let cat = ModelCatalog::primitives();
        assert_eq!(cat.len(), 25);
        for m in cat.models() {
            let b = m.mesh.bounds();
            assert!((b.size().max_elem() - 1.0).abs() < 1e-12, "{}", m.id);
            assert!(b.center().norm() < 1e-12, "{}", m.id);
            assert!(m.mesh.triangle_iter().any(|t| !t.is_degenerate()));
        }
    }

    #[test]
    fn revolved_shapes_are_symmetric_under_eighth_turns() {
        let m = Primitive::Cone {
            radius_bottom: 0.5,
            radius_top: 0.5,
            height: 1.0,
        }
        .mesh();
        let q = Rotation::about_z(std::f64::consts::FRAC_PI_4);
        for v in m.vertices() {
            let r = q.rotate(*v);
            assert!(m.vertices().iter().any(|w| (*w - r).norm() < 1e-12));
        }
    }

    #[test]
    fn closed_primitives_have_expected_areas() {
        // Unit sphere and cube surface areas, coarse tessellation tolerance.
        let s = Primitive::Sphere { radii: [1.0; 3] }.mesh().surface_area();
        assert!((s - 4.0 * std::f64::consts::PI).abs() / (4.0 * std::f64::consts::PI) < 0.05);
        let b = Primitive::Box { size: [1.0; 3] }.mesh().surface_area();
        assert!((b - 6.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_model_is_an_error() {
        assert!(ModelCatalog::primitives().get("nope").is_err());
    }
}
