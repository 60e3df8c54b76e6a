//! Collision-free object placement inside the camera frustum.

use rand::Rng;

use super::background::BackgroundShell;
use super::params::{LayoutParams, Placement};
use super::sampling::{sample_rotation, sample_scale, uniform};
use super::ObjectInstance;
use crate::catalog::CatalogModel;
use crate::error::SceneError;
use crate::geometry::{Aabb, Camera, Ray, Rotation, Vec3};

/// Scene state visible to the placer: background, camera and the objects
/// placed so far.
#[derive(Debug, Clone, Copy)]
pub struct PartialScene<'a> {
    pub background: &'a BackgroundShell,
    pub camera: &'a Camera,
    pub instances: &'a [ObjectInstance],
}

/// Bounding box of the frustum truncated at `far`, clipped to `interior`.
fn frustum_region(camera: &Camera, interior: &Aabb) -> Option<Aabb> {
    let v = camera.view();
    let (w, h) = (camera.width as f64, camera.height as f64);
    let mut pts = Vec::with_capacity(8);
    for (px, py) in [(0.0, 0.0), (w, 0.0), (0.0, h), (w, h)] {
        pts.push(v.unproject(px, py, camera.near));
        pts.push(v.unproject(px, py, camera.far));
    }
    let f = Aabb::from_points(pts)?;
    let min = f.min.max(interior.min);
    let max = f.max.min(interior.max);
    (min.x <= max.x && min.y <= max.y && min.z <= max.z).then(|| Aabb::new(min, max))
}

/// Samples a scale and rotation for `model`, then searches for a location
/// following `strategy`. The result's world box lies inside the background,
/// misses every existing instance, and its center is in the frustum.
pub fn place_object<R: Rng + ?Sized>(
    scene: PartialScene<'_>,
    model: &CatalogModel,
    strategy: Placement,
    params: &LayoutParams,
    rng: &mut R,
) -> Result<ObjectInstance, SceneError> {
    let scale = sample_scale(params, rng);
    let rotation = sample_rotation(params.rotation_axes, rng);
    let local = model.mesh.bounds().transformed(rotation, scale, Vec3::ZERO);
    let exhausted = || SceneError::PlacementExhausted {
        what: format!("object `{}`", model.id),
        attempts: params.max_placement_attempts,
    };

    let interior = scene.background.interior();
    let region = match interior {
        Some(ref b) => frustum_region(scene.camera, b).ok_or_else(exhausted)?,
        None => {
            // Without walls, fall back to the frustum box up to 4x the look-at distance.
            let reach = 4.0 * scene.camera.position.distance(scene.camera.look_at);
            let far = Camera {
                far: reach.min(scene.camera.far),
                ..*scene.camera
            };
            let unbounded = Aabb::new(Vec3::splat(f64::MIN), Vec3::splat(f64::MAX));
            frustum_region(&far, &unbounded).ok_or_else(exhausted)?
        }
    };
    let floor_z = -local.min.z;

    for _ in 0..params.max_placement_attempts {
        let candidate = match strategy {
            Placement::RandomFloor => Some(floor_point(&region, floor_z, rng)),
            Placement::OcclusionAware => {
                if !scene.instances.is_empty() && rng.random::<f64>() < params.occlusion_probability {
                    occluding_point(&scene, params, floor_z, rng)
                } else {
                    Some(floor_point(&region, floor_z, rng))
                }
            }
            Placement::Floating => {
                let zmin = region.min.z - local.min.z;
                let zmax = region.max.z - local.max.z;
                if zmin > zmax {
                    None
                } else {
                    Some(Vec3::new(
                        uniform(rng, region.min.x, region.max.x),
                        uniform(rng, region.min.y, region.max.y),
                        uniform(rng, zmin, zmax),
                    ))
                }
            }
        };
        let Some(translation) = candidate else { continue };
        let world = local.translated(translation);
        if let Some(ref b) = interior {
            if !b.contains(&world) {
                continue;
            }
        }
        if !scene.camera.point_in_frustum(translation) {
            continue;
        }
        if scene.instances.iter().any(|o| o.world_aabb.intersects(&world)) {
            continue;
        }
        return Ok(ObjectInstance {
            model_id: model.id.clone(),
            translation,
            rotation,
            scale,
            world_aabb: world,
        });
    }
    Err(exhausted())
}

fn floor_point<R: Rng + ?Sized>(region: &Aabb, floor_z: f64, rng: &mut R) -> Vec3 {
    Vec3::new(
        uniform(rng, region.min.x, region.max.x),
        uniform(rng, region.min.y, region.max.y),
        floor_z,
    )
}

/// A floor point on the camera ray through a random existing instance,
/// offset in front of or behind it.
fn occluding_point<R: Rng + ?Sized>(
    scene: &PartialScene<'_>,
    params: &LayoutParams,
    floor_z: f64,
    rng: &mut R,
) -> Option<Vec3> {
    let reference = &scene.instances[rng.random_range(0..scene.instances.len())];
    let [lo, hi] = params.occlusion_offset_range;
    let magnitude = uniform(rng, lo, hi);
    let offset = if rng.random::<bool>() { magnitude } else { -magnitude };
    let target = reference.world_aabb.center();
    let ray = Ray::towards(scene.camera.position, target);
    let t = scene.camera.position.distance(target) + offset;
    if t <= scene.camera.near {
        return None;
    }
    let p = ray.at(t);
    Some(Vec3::new(p.x, p.y, floor_z))
}

/// World box of `model` under the given pose, from its rotated model-space corners.
pub fn instance_aabb(model: &CatalogModel, rotation: Rotation, scale: f64, translation: Vec3) -> Aabb {
    model.mesh.bounds().transformed(rotation, scale, translation)
}
