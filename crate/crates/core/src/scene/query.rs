//! Turntable query poses: the object alone, turned about z in 45° steps.

use serde::{Deserialize, Serialize};

use super::{BackgroundShell, ObjectInstance, Scene};
use crate::catalog::CatalogModel;
use crate::geometry::{Aabb, Camera, Rotation, Vec3};

pub const QUERY_POSE_COUNT: usize = 8;
pub const QUERY_STEP_DEG: f64 = 45.0;
/// Camera elevation above the object's center.
pub const QUERY_ELEVATION_DEG: f64 = 15.0;
/// Largest projected box side across the eight poses, as a fraction of the
/// smaller image dimension.
pub const QUERY_FILL: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPose {
    pub angle_deg: f64,
    pub camera: Camera,
    pub instance: ObjectInstance,
}

impl QueryPose {
    /// Single-object scene on an empty background.
    pub fn scene(&self) -> Scene {
        Scene {
            background: BackgroundShell::empty(),
            instances: vec![self.instance.clone()],
            camera: self.camera,
            light_anchor: Some(0),
            seed: 0,
            stream: 0,
            params_digest: String::new(),
        }
    }
}

/// Largest side of the projected box of `b`, over the smaller image dimension.
pub fn projected_fill(camera: &Camera, b: &Aabb) -> Option<f64> {
    let v = camera.view();
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in b.corners() {
        let (x, y, _) = v.project(c)?;
        lo = (lo.0.min(x), lo.1.min(y));
        hi = (hi.0.max(x), hi.1.max(y));
    }
    let side = (hi.0 - lo.0).max(hi.1 - lo.1);
    Some(side / camera.width.min(camera.height) as f64)
}

/// Eight poses at z-angles `k · 45°`, one shared camera framed so the
/// widest pose fills [`QUERY_FILL`] of the smaller image dimension.
pub fn query_poses(model: &CatalogModel, width: u32, height: u32, vertical_fov_deg: f64) -> Vec<QueryPose> {
    let bounds = model.mesh.bounds();
    let center = bounds.center();
    let instances: Vec<ObjectInstance> = (0..QUERY_POSE_COUNT)
        .map(|k| {
            let rotation = Rotation::about_z((k as f64 * QUERY_STEP_DEG).to_radians());
            let translation = -rotation.rotate(center);
            ObjectInstance {
                model_id: model.id.clone(),
                translation,
                rotation,
                scale: 1.0,
                world_aabb: bounds.transformed(rotation, 1.0, translation),
            }
        })
        .collect();

    let elev = QUERY_ELEVATION_DEG.to_radians();
    let dir = Vec3::new(0.0, -elev.cos(), elev.sin());
    let radius = bounds.corners().iter().map(|c| (*c - center).norm()).fold(0.0, f64::max);
    let make_camera = |distance: f64| Camera {
        position: dir * distance,
        look_at: Vec3::ZERO,
        up: Vec3::Z,
        vertical_fov_deg,
        width,
        height,
        near: 0.01,
        far: distance + 10.0 * radius + 1.0,
    };
    let fill = |cam: &Camera| {
        instances
            .iter()
            .map(|i| projected_fill(cam, &i.world_aabb).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    };

    // Start outside the bounding sphere and refine; the fill scales close to
    // 1/distance once the object is small relative to the distance.
    let half_fov = (0.5 * vertical_fov_deg.to_radians()).tan();
    let mut distance = (radius / (QUERY_FILL * half_fov)).max(2.0 * radius);
    for _ in 0..50 {
        let f = fill(&make_camera(distance));
        if (f - QUERY_FILL).abs() < 1e-6 {
            break;
        }
        distance = (distance * f / QUERY_FILL).max(1.05 * radius);
    }
    let camera = make_camera(distance);

    instances
        .into_iter()
        .enumerate()
        .map(|(k, instance)| QueryPose {
            angle_deg: k as f64 * QUERY_STEP_DEG,
            camera,
            instance,
        })
        .collect()
}
