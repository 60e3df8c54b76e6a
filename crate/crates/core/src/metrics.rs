//! Per-scene and dataset-level scene-complexity metrics: visible object
//! count, occlusion, COCO-style scale classes and viewpoint histograms.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::catalog::ModelCatalog;
use crate::error::SceneError;
use crate::geometry::Camera;
use crate::raster::{render_masks, LabelBuffer, MaskPair, RenderScene};
use crate::scene::{ObjectInstance, Scene};

pub const AZIMUTH_BINS: usize = 16;
pub const ELEVATION_BINS: usize = 8;

/// Fixed-point scale for occlusion sums. Integer accumulation keeps the
/// aggregate independent of scene order and chunking.
const OCCLUSION_FIXED_ONE: f64 = (1u64 << 52) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleThresholds {
    pub small_max_area: u64,
    pub medium_max_area: u64,
}

impl Default for ScaleThresholds {
    fn default() -> Self {
        ScaleThresholds {
            small_max_area: 32 * 32,
            medium_max_area: 96 * 96,
        }
    }
}

impl ScaleThresholds {
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.small_max_area == 0 || self.small_max_area >= self.medium_max_area {
            return Err(SceneError::InvalidParams(format!(
                "scale thresholds need 0 < small ({}) < medium ({})",
                self.small_max_area, self.medium_max_area
            )));
        }
        Ok(())
    }

    /// Thresholds rescaled by the ratio of pixel counts, so that objects
    /// keep their class when the same view is rendered at another size.
    pub fn rescaled(&self, from: (u32, u32), to: (u32, u32)) -> Self {
        let ratio = (to.0 as f64 * to.1 as f64) / (from.0 as f64 * from.1 as f64);
        let small = ((self.small_max_area as f64 * ratio).round() as u64).max(1);
        let medium = ((self.medium_max_area as f64 * ratio).round() as u64).max(small + 1);
        ScaleThresholds {
            small_max_area: small,
            medium_max_area: medium,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleClass {
    Small,
    Medium,
    Large,
}

impl ScaleClass {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// `(n_f - n_p) / n_f`, or `None` for an object outside the frame.
pub fn occlusion_of(pair: &MaskPair) -> Option<f64> {
    (pair.n_f > 0).then(|| (pair.n_f - pair.n_p) as f64 / pair.n_f as f64)
}

pub fn classify_scale(n_p: u64, t: &ScaleThresholds) -> Option<ScaleClass> {
    match n_p {
        0 => None,
        n if n <= t.small_max_area => Some(ScaleClass::Small),
        n if n <= t.medium_max_area => Some(ScaleClass::Medium),
        _ => Some(ScaleClass::Large),
    }
}

/// Distinct nonzero labels with at least one pixel.
pub fn count_visible(buffer: &LabelBuffer) -> usize {
    count_visible_min(buffer, 1)
}

pub fn count_visible_min(buffer: &LabelBuffer, min_visible_pixels: u64) -> usize {
    buffer
        .label_counts()
        .values()
        .filter(|&&n| n >= min_visible_pixels.max(1))
        .count()
}

/// Azimuth in [0, 360) and elevation in [-90, 90] degrees of the camera as
/// seen from the object's origin, in the object's own frame.
pub fn viewpoint_angles(instance: &ObjectInstance, camera: &Camera) -> Option<(f64, f64)> {
    let d = instance
        .rotation
        .inverse()
        .rotate(camera.position - instance.translation)
        .try_normalize()?;
    let mut az = d.y.atan2(d.x).to_degrees();
    if az < 0.0 {
        az += 360.0;
    }
    if az >= 360.0 {
        az -= 360.0;
    }
    let el = d.z.clamp(-1.0, 1.0).asin().to_degrees();
    Some((az, el))
}

/// Equal-angle bin indices; elevation bin 0 is the bottom, the last is the top.
pub fn viewpoint_bin(instance: &ObjectInstance, camera: &Camera) -> Option<(usize, usize)> {
    let (az, el) = viewpoint_angles(instance, camera)?;
    let a = ((az / (360.0 / AZIMUTH_BINS as f64)) as usize).min(AZIMUTH_BINS - 1);
    let e = (((el + 90.0) / (180.0 / ELEVATION_BINS as f64)) as usize).min(ELEVATION_BINS - 1);
    Some((a, e))
}

/// Counts indexed `[azimuth][elevation]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewpointHistogram {
    pub counts: Vec<Vec<u64>>,
}

impl Default for ViewpointHistogram {
    fn default() -> Self {
        ViewpointHistogram {
            counts: vec![vec![0; ELEVATION_BINS]; AZIMUTH_BINS],
        }
    }
}

impl ViewpointHistogram {
    pub fn add(&mut self, bin: (usize, usize)) {
        self.counts[bin.0][bin.1] += 1;
    }

    pub fn merge(&mut self, other: &ViewpointHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Mass in the top and bottom elevation bins.
    pub fn polar_count(&self) -> u64 {
        self.counts.iter().map(|c| c[0] + c[ELEVATION_BINS - 1]).sum()
    }

    pub fn polar_fraction(&self) -> Option<f64> {
        let t = self.total();
        (t > 0).then(|| self.polar_count() as f64 / t as f64)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "azimuth_bin,elevation_bin,count")?;
        for (a, row) in self.counts.iter().enumerate() {
            for (e, n) in row.iter().enumerate() {
                writeln!(w, "{a},{e},{n}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub thresholds: ScaleThresholds,
    pub min_visible_pixels: u64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            thresholds: ScaleThresholds::default(),
            min_visible_pixels: 1,
        }
    }
}

/// Resolution the default scale thresholds are defined at.
pub const REFERENCE_RESOLUTION: (u32, u32) = (320, 240);

impl MetricsConfig {
    /// Defaults with thresholds scaled from [`REFERENCE_RESOLUTION`] to `w`×`h`.
    pub fn for_resolution(w: u32, h: u32) -> Self {
        MetricsConfig {
            thresholds: ScaleThresholds::default().rescaled(REFERENCE_RESOLUTION, (w, h)),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetrics {
    pub instance: u16,
    pub n_p: u64,
    pub n_f: u64,
    pub occlusion: Option<f64>,
    pub scale: Option<ScaleClass>,
    pub viewpoint_bin: Option<(usize, usize)>,
    /// Inclusive `[col_min, row_min, col_max, row_max]` of the partial mask.
    pub bbox: Option<[u32; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMetrics {
    pub visible_count: usize,
    pub instances: Vec<InstanceMetrics>,
}

/// Renders the scene's masks and derives per-instance metrics.
pub fn analyze_scene(scene: &Scene, catalog: &ModelCatalog, config: &MetricsConfig) -> Result<SceneMetrics, SceneError> {
    let rs = RenderScene::new(scene, catalog)?;
    let (full, pairs) = render_masks(&rs);
    Ok(scene_metrics(scene, &full, &pairs, config))
}

pub fn scene_metrics(scene: &Scene, full: &LabelBuffer, pairs: &[MaskPair], config: &MetricsConfig) -> SceneMetrics {
    let extents = full.label_extents();
    let min_px = config.min_visible_pixels.max(1);
    let instances = pairs
        .iter()
        .map(|p| {
            let visible = p.n_p >= min_px;
            let inst = &scene.instances[p.instance as usize - 1];
            InstanceMetrics {
                instance: p.instance,
                n_p: p.n_p,
                n_f: p.n_f,
                occlusion: occlusion_of(p),
                scale: if visible { classify_scale(p.n_p, &config.thresholds) } else { None },
                viewpoint_bin: if visible { viewpoint_bin(inst, &scene.camera) } else { None },
                bbox: extents.get(&p.instance).copied(),
            }
        })
        .collect();
    SceneMetrics {
        visible_count: count_visible_min(full, min_px),
        instances,
    }
}

/// Streaming summary of scene metrics. `merge` is commutative and
/// associative, and the result is exactly independent of both.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsAccumulator {
    pub scenes: u64,
    pub visible_sum: u64,
    pub occlusion_fixed_sum: u128,
    pub occlusion_count: u64,
    pub scale_counts: [u64; 3],
    pub out_of_frame: u64,
    pub hidden: u64,
    pub viewpoints: ViewpointHistogram,
}

impl MetricsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, m: &SceneMetrics) {
        self.scenes += 1;
        self.visible_sum += m.visible_count as u64;
        for i in &m.instances {
            match i.occlusion {
                Some(o) => {
                    self.occlusion_fixed_sum += (o * OCCLUSION_FIXED_ONE).round() as u128;
                    self.occlusion_count += 1;
                }
                None => self.out_of_frame += 1,
            }
            if i.n_f > 0 && i.n_p == 0 {
                self.hidden += 1;
            }
            if let Some(s) = i.scale {
                self.scale_counts[s.index()] += 1;
            }
            if let Some(b) = i.viewpoint_bin {
                self.viewpoints.add(b);
            }
        }
    }

    pub fn merge(&mut self, other: &MetricsAccumulator) {
        self.scenes += other.scenes;
        self.visible_sum += other.visible_sum;
        self.occlusion_fixed_sum += other.occlusion_fixed_sum;
        self.occlusion_count += other.occlusion_count;
        for (a, b) in self.scale_counts.iter_mut().zip(other.scale_counts) {
            *a += b;
        }
        self.out_of_frame += other.out_of_frame;
        self.hidden += other.hidden;
        self.viewpoints.merge(&other.viewpoints);
    }

    pub fn finish(&self) -> ProxyMetrics {
        let classified: u64 = self.scale_counts.iter().sum();
        ProxyMetrics {
            scenes: self.scenes,
            object_count: (self.scenes > 0).then(|| self.visible_sum as f64 / self.scenes as f64),
            avg_occlusion: (self.occlusion_count > 0)
                .then(|| self.occlusion_fixed_sum as f64 / OCCLUSION_FIXED_ONE / self.occlusion_count as f64),
            scale_dist: (classified > 0).then(|| self.scale_counts.map(|c| c as f64 / classified as f64)),
            polar_coverage: self.viewpoints.polar_fraction(),
            visible_instances: classified,
            out_of_frame_instances: self.out_of_frame,
            fully_occluded_instances: self.hidden,
            viewpoint_hist: self.viewpoints.clone(),
        }
    }
}

/// Dataset-level metrics. Fields are `None` when nothing contributed to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyMetrics {
    pub scenes: u64,
    /// Mean number of visible instances per scene.
    pub object_count: Option<f64>,
    /// Mean occlusion over in-frame instances, fully occluded ones included.
    pub avg_occlusion: Option<f64>,
    /// Small, medium and large fractions over visible instances.
    pub scale_dist: Option<[f64; 3]>,
    /// Fraction of visible instances seen from the top or bottom elevation bin.
    pub polar_coverage: Option<f64>,
    pub visible_instances: u64,
    pub out_of_frame_instances: u64,
    pub fully_occluded_instances: u64,
    pub viewpoint_hist: ViewpointHistogram,
}

impl ProxyMetrics {
    pub fn is_empty(&self) -> bool {
        self.scenes == 0
    }
}

pub fn aggregate<'a, I: IntoIterator<Item = &'a SceneMetrics>>(scenes: I) -> ProxyMetrics {
    let mut acc = MetricsAccumulator::new();
    for s in scenes {
        acc.add(s);
    }
    acc.finish()
}
