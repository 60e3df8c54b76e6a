use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::background::BackgroundSpec;
use crate::error::SceneError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Uniform over the visible floor, resting on it.
    RandomFloor,
    /// In front of or behind an already placed object along its camera ray.
    OcclusionAware,
    /// Anywhere in the visible interior volume.
    Floating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationAxes {
    /// Uniform angle about world z.
    ZOnly,
    /// Independent uniform angles about x, then y, then z.
    AllAxes,
    /// Haar-uniform random rotation.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleInterval {
    pub lo: f64,
    pub hi: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ScaleMode {
    UniformRange { lo: f64, hi: f64 },
    Intervals { intervals: Vec<ScaleInterval> },
}

impl ScaleMode {
    /// Uniform on [0.4, 2.0].
    pub fn default_uniform() -> Self {
        ScaleMode::UniformRange { lo: 0.4, hi: 2.0 }
    }

    /// [0.1, 1.0], [1.0, 2.0], [2.0, 3.0] with probabilities 0.7, 0.1, 0.2.
    pub fn small_biased_intervals() -> Self {
        ScaleMode::Intervals {
            intervals: vec![
                ScaleInterval {
                    lo: 0.1,
                    hi: 1.0,
                    probability: 0.7,
                },
                ScaleInterval {
                    lo: 1.0,
                    hi: 2.0,
                    probability: 0.1,
                },
                ScaleInterval {
                    lo: 2.0,
                    hi: 3.0,
                    probability: 0.2,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: String| Err(SceneError::InvalidParams(m));
        match self {
            ScaleMode::UniformRange { lo, hi } => {
                if !(*lo > 0.0 && lo <= hi && hi.is_finite()) {
                    return bad(format!("scale range [{lo}, {hi}] must be positive and nonempty"));
                }
            }
            ScaleMode::Intervals { intervals } => {
                if intervals.is_empty() {
                    return bad("no scale intervals".into());
                }
                for iv in intervals {
                    if !(iv.lo > 0.0 && iv.lo <= iv.hi && iv.hi.is_finite()) {
                        return bad(format!("scale interval [{}, {}] invalid", iv.lo, iv.hi));
                    }
                    if !(iv.probability >= 0.0) {
                        return bad(format!("negative interval probability {}", iv.probability));
                    }
                }
                let total: f64 = intervals.iter().map(|i| i.probability).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("interval probabilities sum to {total}, not 1"));
                }
            }
        }
        Ok(())
    }
}

/// Everything that steers scene generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutParams {
    pub placement: Placement,
    pub rotation_axes: RotationAxes,
    pub scale_mode: ScaleMode,
    /// Camera height range, meters.
    pub camera_height_range: [f64; 2],
    /// Look-at target height range, meters.
    pub look_at_height_range: [f64; 2],
    /// Minimum free distance along the view ray to the background.
    pub camera_clearance_min: f64,
    /// Minimum horizontal camera distance from the background center;
    /// `None` means a quarter of the smaller horizontal extent.
    pub camera_min_radius: Option<f64>,
    pub target_object_count: u32,
    pub max_placement_attempts: u32,
    pub background: BackgroundSpec,
    /// Probability that an occlusion-aware placement pairs with an existing object.
    pub occlusion_probability: f64,
    /// Magnitude range of the along-ray offset from the paired object, meters.
    pub occlusion_offset_range: [f64; 2],
    pub vertical_fov_deg: f64,
    pub image_width: u32,
    pub image_height: u32,
    pub near: f64,
    pub far: f64,
    pub seed: u64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            placement: Placement::RandomFloor,
            rotation_axes: RotationAxes::ZOnly,
            scale_mode: ScaleMode::default_uniform(),
            camera_height_range: [0.1, 5.0],
            look_at_height_range: [0.0, 2.0],
            camera_clearance_min: 1.5,
            camera_min_radius: None,
            target_object_count: 12,
            max_placement_attempts: 200,
            background: BackgroundSpec::WhiteCube { side: 10.0 },
            occlusion_probability: 0.8,
            occlusion_offset_range: [0.3, 2.0],
            vertical_fov_deg: 60.0,
            image_width: 320,
            image_height: 240,
            near: 0.05,
            far: 100.0,
            seed: 0,
        }
    }
}

fn check_range(name: &str, r: [f64; 2]) -> Result<(), SceneError> {
    if r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] {
        Ok(())
    } else {
        Err(SceneError::InvalidParams(format!(
            "{name} [{}, {}] is empty",
            r[0], r[1]
        )))
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<(), SceneError> {
        self.scale_mode.validate()?;
        self.background.validate()?;
        check_range("camera_height_range", self.camera_height_range)?;
        check_range("look_at_height_range", self.look_at_height_range)?;
        check_range("occlusion_offset_range", self.occlusion_offset_range)?;
        let bad = |m: &str| Err(SceneError::InvalidParams(m.to_string()));
        if self.target_object_count < 1 {
            return bad("target_object_count must be at least 1");
        }
        if self.max_placement_attempts < 1 {
            return bad("max_placement_attempts must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.occlusion_probability) {
            return bad("occlusion_probability must lie in [0, 1]");
        }
        if self.occlusion_offset_range[0] < 0.0 {
            return bad("occlusion_offset_range must be nonnegative");
        }
        if !(self.camera_clearance_min >= 0.0) {
            return bad("camera_clearance_min must be nonnegative");
        }
        if !(self.vertical_fov_deg > 0.0 && self.vertical_fov_deg < 180.0) {
            return bad("vertical_fov_deg must lie in (0, 180)");
        }
        if self.image_width == 0 || self.image_height == 0 {
            return bad("image size must be positive");
        }
        if !(self.near > 0.0 && self.near < self.far) {
            return bad("need 0 < near < far");
        }
        Ok(())
    }

    /// Hex SHA-256 prefix (16 bytes) of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("params serialize");
        let hash = Sha256::digest(&bytes);
        hex::encode(&hash[..16])
    }
}
