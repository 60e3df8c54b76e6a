//! Scene assembly: background, camera sampling, object selection and placement.

pub mod background;
pub mod params;
pub mod placement;
pub mod presets;
pub mod query;
pub mod rng;
pub mod sampling;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use background::{BackgroundKind, BackgroundShell, BackgroundSpec};
pub use params::{LayoutParams, Placement, RotationAxes, ScaleInterval, ScaleMode};
pub use placement::{place_object, PartialScene};
pub use query::{query_poses, QueryPose};
pub use sampling::{sample_camera, sample_rotation, sample_scale};

use crate::catalog::ModelCatalog;
use crate::error::SceneError;
use crate::geometry::{Aabb, Camera, Rotation, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub model_id: String,
    pub translation: Vec3,
    pub rotation: Rotation,
    /// Uniform scale applied to the normalized model.
    pub scale: f64,
    pub world_aabb: Aabb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub background: BackgroundShell,
    pub instances: Vec<ObjectInstance>,
    pub camera: Camera,
    /// Instance the three-point light rig is aimed at.
    pub light_anchor: Option<usize>,
    pub seed: u64,
    pub stream: u64,
    pub params_digest: String,
}

/// Assembles scene number `index` of the dataset defined by `params`.
pub fn assemble_indexed(
    params: &LayoutParams,
    catalog: &ModelCatalog,
    index: u64,
) -> Result<Scene, SceneError> {
    let mut rng = rng::scene_rng(params.seed, index);
    let mut scene = assemble_scene(params, catalog, &mut rng)?;
    scene.stream = index;
    Ok(scene)
}

/// Background, then camera, then up to `target_object_count` objects drawn
/// uniformly with replacement from the catalog. Objects that cannot be
/// placed are skipped; fails only if none could be placed.
pub fn assemble_scene<R: Rng + ?Sized>(
    params: &LayoutParams,
    catalog: &ModelCatalog,
    rng: &mut R,
) -> Result<Scene, SceneError> {
    params.validate()?;
    if catalog.is_empty() {
        return Err(SceneError::EmptyCatalog);
    }
    let background = params.background.instantiate(rng);
    let camera = sample_camera(params, &background, rng)?;
    let mut instances: Vec<ObjectInstance> = Vec::new();
    let mut last_err = None;
    for _ in 0..params.target_object_count {
        let model = catalog.by_index(rng.random_range(0..catalog.len()));
        let partial = PartialScene {
            background: &background,
            camera: &camera,
            instances: &instances,
        };
        match place_object(partial, model, params.placement, params, rng) {
            Ok(inst) => instances.push(inst),
            Err(e @ SceneError::PlacementExhausted { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    if instances.is_empty() {
        return Err(last_err.unwrap_or(SceneError::PlacementExhausted {
            what: "scene objects".into(),
            attempts: params.max_placement_attempts,
        }));
    }
    let light_anchor = Some(rng.random_range(0..instances.len()));
    Ok(Scene {
        background,
        instances,
        camera,
        light_anchor,
        seed: params.seed,
        stream: 0,
        params_digest: params.digest(),
    })
}
