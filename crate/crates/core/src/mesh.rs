//! Indexed triangle meshes.

use crate::error::MeshError;
use crate::geometry::{Aabb, Rotation, Triangle, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    bounds: Aabb,
}

impl TriMesh {
    /// Validates indices and requires at least one non-degenerate triangle.
    /// The bounds cover every vertex, referenced or not.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        let n = vertices.len() as u32;
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(MeshError::EmptyMesh(format!(
                "triangle {t:?} references a vertex beyond {n}"
            )));
        }
        if let Some(v) = vertices.iter().find(|v| !v.is_finite()) {
            return Err(MeshError::EmptyMesh(format!("non-finite vertex {v:?}")));
        }
        let bounds = Aabb::from_points(vertices.iter().copied())
            .ok_or_else(|| MeshError::EmptyMesh("no vertices".into()))?;
        let mesh = TriMesh {
            vertices,
            triangles,
            bounds,
        };
        if !mesh.triangle_iter().any(|t| !t.is_degenerate()) {
            return Err(MeshError::EmptyMesh(
                "no non-degenerate triangles".into(),
            ));
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_iter(&self) -> impl Iterator<Item = Triangle> + '_ {
        self.triangles.iter().map(|t| {
            Triangle::new(
                self.vertices[t[0] as usize],
                self.vertices[t[1] as usize],
                self.vertices[t[2] as usize],
            )
        })
    }

    pub fn surface_area(&self) -> f64 {
        self.triangle_iter().map(|t| t.area()).sum()
    }

    /// Recentered on its bounds center and uniformly scaled so the largest
    /// bounds dimension is 1.
    pub fn normalized(&self) -> TriMesh {
        let c = self.bounds.center();
        let extent = self.bounds.size().max_elem();
        let s = if extent > 0.0 { 1.0 / extent } else { 1.0 };
        let vertices: Vec<Vec3> = self.vertices.iter().map(|&v| (v - c) * s).collect();
        let bounds = Aabb::from_points(vertices.iter().copied()).expect("nonempty");
        TriMesh {
            vertices,
            triangles: self.triangles.clone(),
            bounds,
        }
    }

    /// World-space triangles under `p ↦ translation + rotation(scale · p)`.
    pub fn transformed_triangles(
        &self,
        rotation: Rotation,
        scale: f64,
        translation: Vec3,
    ) -> Vec<Triangle> {
        let world: Vec<Vec3> = self
            .vertices
            .iter()
            .map(|&v| translation + rotation.rotate(v * scale))
            .collect();
        self.triangles
            .iter()
            .map(|t| {
                Triangle::new(
                    world[t[0] as usize],
                    world[t[1] as usize],
                    world[t[2] as usize],
                )
            })
            .collect()
    }
}
