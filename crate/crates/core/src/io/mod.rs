//! File formats: stable JSON, scene export/import, dataset manifests.

pub mod json;
pub mod manifest;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use json::{read_json, to_stable_json, write_json};
pub use manifest::{analyze_dir, generate, with_jobs, DatasetManifest, GenerateOptions};

use crate::catalog::ModelCatalog;
use crate::error::IoError;
use crate::geometry::{Aabb, Camera, Vec3};
use crate::scene::{BackgroundShell, ObjectInstance, Scene};

pub const SCENE_FORMAT: &str = "synthlayout-scene/1";

/// Where a dataset's models come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CatalogSpec {
    Primitives,
    ObjDir { path: PathBuf },
}

impl CatalogSpec {
    pub fn load(&self) -> Result<ModelCatalog, IoError> {
        match self {
            CatalogSpec::Primitives => Ok(ModelCatalog::primitives()),
            CatalogSpec::ObjDir { path } => Ok(ModelCatalog::from_obj_dir(path)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Light {
    pub position: Vec3,
    pub target: Vec3,
    pub intensity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightRig {
    pub key: Light,
    pub fill: Light,
    pub back: Light,
}

/// Key and fill 45° either side of the camera heading, back light opposite
/// the camera, all at four bounding radii from the anchor's center.
pub fn three_point_rig(anchor: &Aabb, camera_position: Vec3) -> LightRig {
    let c = anchor.center();
    let r = (0.5 * anchor.size().norm()).max(0.1);
    let dist = 4.0 * r;
    let toward = Vec3::new(camera_position.x - c.x, camera_position.y - c.y, 0.0)
        .try_normalize()
        .unwrap_or(Vec3::new(0.0, -1.0, 0.0));
    let side = Vec3::Z.cross(toward);
    let diag = std::f64::consts::FRAC_1_SQRT_2;
    let light = |dir: Vec3, lift: f64, intensity: f64| Light {
        position: c + dir * dist + Vec3::Z * (lift * dist),
        target: c,
        intensity,
    };
    LightRig {
        key: light((toward + side) * diag, 0.75, 1.0),
        fill: light((toward - side) * diag, 0.25, 0.5),
        back: light(-toward, 1.0, 0.75),
    }
}

/// On-disk scene layout. Lights are derived on export and ignored on import.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub format: String,
    pub seed: u64,
    pub stream: u64,
    pub params_digest: String,
    pub background: BackgroundShell,
    pub camera: Camera,
    pub instances: Vec<ObjectInstance>,
    pub light_anchor: Option<usize>,
    pub lights: Option<LightRig>,
}

impl SceneFile {
    pub fn from_scene(scene: &Scene) -> Self {
        let lights = scene
            .light_anchor
            .and_then(|i| scene.instances.get(i))
            .map(|inst| three_point_rig(&inst.world_aabb, scene.camera.position));
        SceneFile {
            format: SCENE_FORMAT.to_string(),
            seed: scene.seed,
            stream: scene.stream,
            params_digest: scene.params_digest.clone(),
            background: scene.background,
            camera: scene.camera,
            instances: scene.instances.clone(),
            light_anchor: scene.light_anchor,
            lights,
        }
    }

    pub fn into_scene(self) -> Result<Scene, IoError> {
        if self.format != SCENE_FORMAT {
            return Err(IoError::Invalid(format!(
                "unsupported scene format {:?}",
                self.format
            )));
        }
        self.camera.validate().map_err(|e| IoError::Invalid(e.to_string()))?;
        if let Some(a) = self.light_anchor {
            if a >= self.instances.len() {
                return Err(IoError::Invalid(format!("light anchor {a} out of range")));
            }
        }
        Ok(Scene {
            background: self.background,
            instances: self.instances,
            camera: self.camera,
            light_anchor: self.light_anchor,
            seed: self.seed,
            stream: self.stream,
            params_digest: self.params_digest,
        })
    }
}

pub fn scene_to_json(scene: &Scene) -> Result<String, IoError> {
    to_stable_json(&SceneFile::from_scene(scene))
}

pub fn scene_from_json(text: &str) -> Result<Scene, IoError> {
    let file: SceneFile = serde_json::from_str(text).map_err(|e| IoError::json("scene", e))?;
    file.into_scene()
}

pub fn export_scene(scene: &Scene, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, scene_to_json(scene)?).map_err(|e| IoError::io(path, e))
}

pub fn import_scene(path: &Path) -> Result<Scene, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    scene_from_json(&text)
}
