//! Z-buffer label rasterizer.
//!
//! Pixels are sampled at their centers. Coverage uses edge functions with a
//! top-left fill rule; depth is view-axis distance, interpolated
//! perspective-correctly. Depth ties within `DEPTH_TIE_EPS` go to the
//! lower instance index, with background last, the same rule the ray
//! caster applies.

mod buffer;

use std::collections::BTreeSet;

pub use buffer::LabelBuffer;
use serde::{Deserialize, Serialize};

use crate::catalog::ModelCatalog;
use crate::error::SceneError;
use crate::geometry::{closer, Camera, TriangleGroup, Vec3, ViewTransform};
use crate::scene::Scene;

/// Scene resolved to world-space triangles. Group ids: 0 for background,
/// `i + 1` for instance `i`.
#[derive(Debug, Clone)]
pub struct RenderScene {
    pub camera: Camera,
    pub background: Option<TriangleGroup>,
    pub objects: Vec<TriangleGroup>,
}

impl RenderScene {
    pub fn new(scene: &Scene, catalog: &ModelCatalog) -> Result<Self, SceneError> {
        scene.camera.validate()?;
        if scene.instances.len() >= u16::MAX as usize {
            return Err(SceneError::InvalidParams(format!(
                "{} instances exceed the 16-bit label range",
                scene.instances.len()
            )));
        }
        let objects = scene
            .instances
            .iter()
            .enumerate()
            .map(|(i, inst)| {
                let model = catalog.get(&inst.model_id)?;
                let tris =
                    model
                        .mesh
                        .transformed_triangles(inst.rotation, inst.scale, inst.translation);
                Ok(TriangleGroup::new(i as u32 + 1, tris).expect("catalog meshes are nonempty"))
            })
            .collect::<Result<Vec<_>, SceneError>>()?;
        Ok(RenderScene {
            camera: scene.camera,
            background: scene.background.triangle_group(),
            objects,
        })
    }

    /// Background first, then objects in instance order.
    pub fn groups(&self) -> impl Iterator<Item = &TriangleGroup> {
        self.background.iter().chain(self.objects.iter())
    }

    /// Same scene viewed at a different resolution.
    pub fn with_resolution(&self, width: u32, height: u32) -> Self {
        RenderScene {
            camera: Camera {
                width,
                height,
                ..self.camera
            },
            ..self.clone()
        }
    }
}

/// Rasterizes every group except instances whose label is in `hide`.
/// Background writes depth with label 0.
pub fn rasterize(scene: &RenderScene, hide: Option<&BTreeSet<u16>>) -> LabelBuffer {
    let view = scene.camera.view();
    let mut buf = LabelBuffer::new(scene.camera.width, scene.camera.height);
    for g in scene.groups() {
        if g.id != 0 && hide.is_some_and(|h| h.contains(&(g.id as u16))) {
            continue;
        }
        draw_group(&mut buf, &view, g);
    }
    buf
}

/// Visible (`n_p`) and unoccluded (`n_f`) pixel counts for one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskPair {
    /// Label of the instance (`index + 1`).
    pub instance: u16,
    pub n_p: u64,
    pub n_f: u64,
}

/// Partial masks from one full render; each full mask from a render with
/// every other object hidden and the background kept.
pub fn mask_pairs(scene: &RenderScene) -> Vec<MaskPair> {
    render_masks(scene).1
}

/// The full label buffer together with every instance's mask pair.
pub fn render_masks(scene: &RenderScene) -> (LabelBuffer, Vec<MaskPair>) {
    let view = scene.camera.view();
    let mut base = LabelBuffer::new(scene.camera.width, scene.camera.height);
    if let Some(bg) = &scene.background {
        draw_group(&mut base, &view, bg);
    }
    let mut full = base.clone();
    for g in &scene.objects {
        draw_group(&mut full, &view, g);
    }
    let partial_counts = full.label_counts();
    let pairs = scene
        .objects
        .iter()
        .map(|g| {
            let mut alone = base.clone();
            draw_group(&mut alone, &view, g);
            let label = g.id as u16;
            MaskPair {
                instance: label,
                n_p: partial_counts.get(&label).copied().unwrap_or(0),
                n_f: alone.count_label(label),
            }
        })
        .collect();
    (full, pairs)
}

#[derive(Clone, Copy)]
struct ScreenVertex {
    x: f64,
    y: f64,
    z: f64,
}

fn draw_group(buf: &mut LabelBuffer, view: &ViewTransform, group: &TriangleGroup) {
    let label = group.id as u16;
    for tri in &group.triangles {
        if tri.is_degenerate() {
            continue;
        }
        let v = [view.to_view(tri.a), view.to_view(tri.b), view.to_view(tri.c)];
        let poly = clip_near(&v, view.near);
        if poly.len() < 3 {
            continue;
        }
        let screen: Vec<ScreenVertex> = poly
            .iter()
            .map(|p| {
                let (x, y) = view.view_to_pixel(*p);
                ScreenVertex { x, y, z: p.z }
            })
            .collect();
        for k in 1..screen.len() - 1 {
            fill_triangle(buf, view, [screen[0], screen[k], screen[k + 1]], label);
        }
    }
}

/// Sutherland–Hodgman against the plane `z = near`, keeping `z >= near`.
fn clip_near(v: &[Vec3; 3], near: f64) -> Vec<Vec3> {
    if v.iter().all(|p| p.z >= near) {
        return v.to_vec();
    }
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let p = v[i];
        let q = v[(i + 1) % 3];
        let (pin, qin) = (p.z >= near, q.z >= near);
        if pin {
            out.push(p);
        }
        if pin != qin {
            let t = (near - p.z) / (q.z - p.z);
            let mut x = p.lerp(q, t);
            x.z = near;
            out.push(x);
        }
    }
    out
}

#[inline]
fn edge(a: &ScreenVertex, b: &ScreenVertex, px: f64, py: f64) -> f64 {
    (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)
}

/// Edge `a → b` of a positively oriented triangle owns pixel centers lying
/// exactly on it when it is a top or left edge.
#[inline]
fn is_top_left(a: &ScreenVertex, b: &ScreenVertex) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    dy < 0.0 || (dy == 0.0 && dx > 0.0)
}

fn fill_triangle(buf: &mut LabelBuffer, view: &ViewTransform, mut t: [ScreenVertex; 3], label: u16) {
    let mut area = edge(&t[0], &t[1], t[2].x, t[2].y);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    if area < 0.0 {
        t.swap(1, 2);
        area = -area;
    }
    let (w, h) = (buf.width() as i64, buf.height() as i64);
    let min_x = t.iter().map(|v| v.x).fold(f64::INFINITY, f64::min);
    let max_x = t.iter().map(|v| v.x).fold(f64::NEG_INFINITY, f64::max);
    let min_y = t.iter().map(|v| v.y).fold(f64::INFINITY, f64::min);
    let max_y = t.iter().map(|v| v.y).fold(f64::NEG_INFINITY, f64::max);
    let x0 = ((min_x - 0.5).ceil() as i64).max(0);
    let x1 = ((max_x - 0.5).floor() as i64).min(w - 1);
    let y0 = ((min_y - 0.5).ceil() as i64).max(0);
    let y1 = ((max_y - 0.5).floor() as i64).min(h - 1);
    if x0 > x1 || y0 > y1 {
        return;
    }
    let tl = [
        is_top_left(&t[1], &t[2]),
        is_top_left(&t[2], &t[0]),
        is_top_left(&t[0], &t[1]),
    ];
    let inv_z = [1.0 / t[0].z, 1.0 / t[1].z, 1.0 / t[2].z];
    let inside = |e: f64, top_left: bool| e > 0.0 || (e == 0.0 && top_left);

    for row in y0..=y1 {
        let py = row as f64 + 0.5;
        for col in x0..=x1 {
            let px = col as f64 + 0.5;
            let e0 = edge(&t[1], &t[2], px, py);
            let e1 = edge(&t[2], &t[0], px, py);
            let e2 = edge(&t[0], &t[1], px, py);
            if !(inside(e0, tl[0]) && inside(e1, tl[1]) && inside(e2, tl[2])) {
                continue;
            }
            let z = area / (e0 * inv_z[0] + e1 * inv_z[1] + e2 * inv_z[2]);
            if !(z >= view.near && z <= view.far) {
                continue;
            }
            let idx = row as usize * buf.width() as usize + col as usize;
            if closer(z, label as u32, buf.depth[idx], buf.labels[idx] as u32) {
                buf.depth[idx] = z;
                buf.labels[idx] = label;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rotation;
    use crate::scene::{BackgroundShell, ObjectInstance};

    fn cube_instance(cat: &ModelCatalog, at: Vec3, scale: f64) -> ObjectInstance {
        let m = cat.get("box_0").unwrap();
        ObjectInstance {
            model_id: m.id.clone(),
            translation: at,
            rotation: Rotation::IDENTITY,
            scale,
            world_aabb: m.mesh.bounds().transformed(Rotation::IDENTITY, scale, at),
        }
    }

    fn camera(w: u32, h: u32) -> Camera {
        Camera::new(Vec3::new(0.0, -5.0, 0.0), Vec3::ZERO, Vec3::Z, 60.0, w, h, 0.05, 100.0).unwrap()
    }

    fn scene(instances: Vec<ObjectInstance>, w: u32, h: u32) -> Scene {
        Scene {
            background: BackgroundShell::empty(),
            instances,
            camera: camera(w, h),
            light_anchor: None,
            seed: 0,
            stream: 0,
            params_digest: String::new(),
        }
    }

    #[test]
    fn empty_scene_is_all_background() {
        let cat = ModelCatalog::primitives();
        let rs = RenderScene::new(&scene(vec![], 32, 24), &cat).unwrap();
        let buf = rasterize(&rs, None);
        assert!(buf.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn centered_cube_covers_image_center() {
        let cat = ModelCatalog::primitives();
        let rs = RenderScene::new(&scene(vec![cube_instance(&cat, Vec3::ZERO, 1.0)], 64, 48), &cat).unwrap();
        let buf = rasterize(&rs, None);
        assert_eq!(buf.label_at(32, 24), 1);
        // Front face at y = -0.5 lies 4.5 m from the camera along the axis.
        assert!((buf.depth_at(32, 24) - 4.5).abs() < 1e-12);
    }

    #[test]
    fn lone_object_has_equal_masks() {
        let cat = ModelCatalog::primitives();
        let rs = RenderScene::new(&scene(vec![cube_instance(&cat, Vec3::ZERO, 1.0)], 64, 48), &cat).unwrap();
        let pairs = mask_pairs(&rs);
        assert_eq!(pairs.len(), 1);
        assert!(pairs[0].n_f > 0);
        assert_eq!(pairs[0].n_p, pairs[0].n_f);
    }

    #[test]
    fn object_behind_larger_coaxial_object_is_fully_hidden() {
        let cat = ModelCatalog::primitives();
        let behind = cube_instance(&cat, Vec3::new(0.0, 3.0, 0.0), 0.5);
        let front = cube_instance(&cat, Vec3::new(0.0, -1.0, 0.0), 1.5);
        let rs = RenderScene::new(&scene(vec![behind, front], 64, 48), &cat).unwrap();
        let pairs = mask_pairs(&rs);
        assert_eq!(pairs[0].n_p, 0);
        assert!(pairs[0].n_f > 0);
        assert_eq!(pairs[1].n_p, pairs[1].n_f);
    }

    #[test]
    fn hiding_an_instance_removes_its_label() {
        let cat = ModelCatalog::primitives();
        let rs = RenderScene::new(&scene(vec![cube_instance(&cat, Vec3::ZERO, 1.0)], 32, 24), &cat).unwrap();
        let hide: BTreeSet<u16> = [1].into();
        assert!(rasterize(&rs, Some(&hide)).labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn triangles_crossing_the_near_plane_are_clipped() {
        // Floor plane passing under and behind the camera.
        let floor = TriangleGroup::new(
            0,
            vec![crate::geometry::Triangle::new(
                Vec3::new(-50.0, -50.0, -1.0),
                Vec3::new(50.0, -50.0, -1.0),
                Vec3::new(0.0, 50.0, -1.0),
            )],
        )
        .unwrap();
        let rs = RenderScene {
            camera: camera(32, 24),
            background: Some(floor),
            objects: vec![],
        };
        let buf = rasterize(&rs, None);
        // Bottom rows see the floor, top rows see nothing.
        assert!(buf.depth_at(16, 23).is_finite());
        assert!(buf.depth_at(16, 0).is_infinite());
    }

    #[test]
    fn shared_edges_are_filled_exactly_once() {
        // Two triangles forming a quad; every covered pixel is written by
        // exactly one of them, so the per-triangle counts add up.
        let view = camera(40, 30).view();
        let q = [
            Vec3::new(-1.0, 0.0, -1.0),
            Vec3::new(1.0, 0.0, -1.0),
            Vec3::new(1.0, 0.0, 1.0),
            Vec3::new(-1.0, 0.0, 1.0),
        ];
        let count = |tris: Vec<crate::geometry::Triangle>| {
            let mut b = LabelBuffer::new(40, 30);
            let g = TriangleGroup::new(1, tris).unwrap();
            draw_group(&mut b, &view, &g);
            b.count_label(1)
        };
        use crate::geometry::Triangle as T;
        let a = count(vec![T::new(q[0], q[1], q[2])]);
        let b = count(vec![T::new(q[0], q[2], q[3])]);
        let both = count(vec![T::new(q[0], q[1], q[2]), T::new(q[0], q[2], q[3])]);
        assert_eq!(a + b, both);
    }
}
