//! Dataset generation to disk and analysis of generated scene directories.
//!
//! Layout of a generated directory:
//!
//! ```text
//! manifest.json
//! scenes/scene_000000.json
//! labels/scene_000000.pgm
//! depth/scene_000000.depth
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{read_json, scene_to_json, write_json, CatalogSpec, SceneFile};
use crate::catalog::ModelCatalog;
use crate::error::IoError;
use crate::geometry::{Camera, Rotation, Vec3};
use crate::metrics::{scene_metrics, MetricsAccumulator, MetricsConfig, ProxyMetrics, ScaleClass, SceneMetrics};
use crate::raster::{render_masks, RenderScene};
use crate::scene::{assemble_indexed, query_poses, LayoutParams, Scene};

pub const MANIFEST_VERSION: &str = "synthlayout-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";
const CHUNK: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance: u16,
    pub model_id: String,
    /// Inclusive `[col_min, row_min, col_max, row_max]` of the visible mask.
    pub bbox: Option<[u32; 4]>,
    pub n_p: u64,
    pub n_f: u64,
    pub occlusion: Option<f64>,
    pub scale_class: Option<ScaleClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub index: u64,
    pub seed: u64,
    pub stream: u64,
    pub scene_file: String,
    pub labels_file: String,
    pub depth_file: Option<String>,
    pub width: u32,
    pub height: u32,
    pub visible_count: usize,
    pub instances: Vec<InstanceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedScene {
    pub index: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPoseEntry {
    pub angle_deg: f64,
    pub translation: Vec3,
    pub rotation: Rotation,
    pub camera: Camera,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPoseRecord {
    pub model_id: String,
    pub poses: Vec<QueryPoseEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: String,
    pub params: LayoutParams,
    pub params_digest: String,
    pub catalog: CatalogSpec,
    pub models: Vec<String>,
    pub metrics_config: MetricsConfig,
    pub scenes: Vec<SceneRecord>,
    pub failed: Vec<FailedScene>,
    pub query_poses: Vec<QueryPoseRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateOptions {
    pub count: u64,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
    pub write_depth: bool,
    pub query_poses: bool,
    pub metrics: MetricsConfig,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            count: 10,
            jobs: 0,
            write_depth: true,
            query_poses: true,
            metrics: MetricsConfig::default(),
        }
    }
}

/// Runs `f` on a pool of `jobs` threads; 0 uses the global pool.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, IoError> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| IoError::Invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

struct RenderedScene {
    index: u64,
    scene_json: String,
    pgm: Vec<u8>,
    depth: Option<Vec<u8>>,
    record: SceneRecord,
}

fn file_stem(index: u64) -> String {
    format!("scene_{index:06}")
}

fn render_one(
    params: &LayoutParams,
    catalog: &ModelCatalog,
    index: u64,
    options: &GenerateOptions,
) -> Result<RenderedScene, String> {
    let scene = assemble_indexed(params, catalog, index).map_err(|e| e.to_string())?;
    let rs = RenderScene::new(&scene, catalog).map_err(|e| e.to_string())?;
    let (full, pairs) = render_masks(&rs);
    let m = scene_metrics(&scene, &full, &pairs, &options.metrics);
    let scene_json = scene_to_json(&scene).map_err(|e| e.to_string())?;
    let mut pgm = Vec::new();
    full.write_pgm(&mut pgm).map_err(|e| e.to_string())?;
    let depth = if options.write_depth {
        let mut d = Vec::new();
        full.write_depth_raw(&mut d).map_err(|e| e.to_string())?;
        Some(d)
    } else {
        None
    };
    let stem = file_stem(index);
    let record = SceneRecord {
        index,
        seed: scene.seed,
        stream: scene.stream,
        scene_file: format!("scenes/{stem}.json"),
        labels_file: format!("labels/{stem}.pgm"),
        depth_file: options.write_depth.then(|| format!("depth/{stem}.depth")),
        width: full.width(),
        height: full.height(),
        visible_count: m.visible_count,
        instances: m
            .instances
            .iter()
            .map(|i| InstanceRecord {
                instance: i.instance,
                model_id: scene.instances[i.instance as usize - 1].model_id.clone(),
                bbox: i.bbox,
                n_p: i.n_p,
                n_f: i.n_f,
                occlusion: i.occlusion,
                scale_class: i.scale,
            })
            .collect(),
    };
    Ok(RenderedScene {
        index,
        scene_json,
        pgm,
        depth,
        record,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(|e| IoError::io(path, e))
}

fn create_dir(path: &Path) -> Result<(), IoError> {
    fs::create_dir_all(path).map_err(|e| IoError::io(path, e))
}

/// Generates `options.count` scenes into `out`. Scenes render in parallel
/// chunks; files and the manifest are written in index order by the caller's
/// thread, so output does not depend on `jobs`.
pub fn generate(
    params: &LayoutParams,
    catalog_spec: &CatalogSpec,
    catalog: &ModelCatalog,
    out: &Path,
    options: &GenerateOptions,
) -> Result<DatasetManifest, IoError> {
    params.validate()?;
    options.metrics.thresholds.validate()?;
    for sub in ["scenes", "labels", "depth"] {
        if sub != "depth" || options.write_depth {
            create_dir(&out.join(sub))?;
        }
    }
    let mut scenes = Vec::new();
    let mut failed = Vec::new();
    let mut start = 0;
    while start < options.count {
        let end = (start + CHUNK).min(options.count);
        let batch: Vec<(u64, Result<RenderedScene, String>)> = with_jobs(options.jobs, || {
            (start..end)
                .into_par_iter()
                .map(|i| (i, render_one(params, catalog, i, options)))
                .collect()
        })?;
        for (index, r) in batch {
            match r {
                Ok(s) => {
                    debug_assert_eq!(s.index, index);
                    write_file(&out.join(&s.record.scene_file), s.scene_json.as_bytes())?;
                    write_file(&out.join(&s.record.labels_file), &s.pgm)?;
                    if let (Some(d), Some(name)) = (&s.depth, &s.record.depth_file) {
                        write_file(&out.join(name), d)?;
                    }
                    scenes.push(s.record);
                }
                Err(error) => failed.push(FailedScene { index, error }),
            }
        }
        start = end;
    }

    let query = if options.query_poses {
        catalog
            .models()
            .iter()
            .map(|m| QueryPoseRecord {
                model_id: m.id.clone(),
                poses: query_poses(m, params.image_width, params.image_height, params.vertical_fov_deg)
                    .into_iter()
                    .map(|p| QueryPoseEntry {
                        angle_deg: p.angle_deg,
                        translation: p.instance.translation,
                        rotation: p.instance.rotation,
                        camera: p.camera,
                    })
                    .collect(),
            })
            .collect()
    } else {
        Vec::new()
    };

    let manifest = DatasetManifest {
        version: MANIFEST_VERSION.to_string(),
        params: params.clone(),
        params_digest: params.digest(),
        catalog: catalog_spec.clone(),
        models: catalog.models().iter().map(|m| m.id.clone()).collect(),
        metrics_config: options.metrics,
        scenes,
        failed,
        query_poses: query,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Scene JSON files of a directory: `scenes/*.json` if that exists,
/// otherwise `*.json` directly inside, excluding the manifest. Sorted.
pub fn scene_files(dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    let sub = dir.join("scenes");
    let root = if sub.is_dir() { sub } else { dir.to_path_buf() };
    let entries = fs::read_dir(&root).map_err(|e| IoError::io(&root, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json") && p.file_name().is_some_and(|n| n != MANIFEST_FILE))
        .collect();
    files.sort();
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub scene_files: usize,
    pub metrics: ProxyMetrics,
}

/// Re-renders every scene in `dir` and aggregates its metrics. The catalog
/// and, unless `config` is given, the metrics config come from the
/// directory's manifest when present, else `fallback` and the defaults.
pub fn analyze_dir(
    dir: &Path,
    fallback: &CatalogSpec,
    config: Option<&MetricsConfig>,
    jobs: usize,
) -> Result<AnalysisReport, IoError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let (spec, stored) = if manifest_path.is_file() {
        let m = read_json::<DatasetManifest>(&manifest_path)?;
        (m.catalog, m.metrics_config)
    } else {
        (fallback.clone(), MetricsConfig::default())
    };
    let config = config.copied().unwrap_or(stored);
    let config = &config;
    let catalog = spec.load()?;
    let files = scene_files(dir)?;
    let per_scene: Vec<Result<SceneMetrics, IoError>> = with_jobs(jobs, || {
        files
            .par_iter()
            .map(|f| {
                let scene: Scene = read_json::<SceneFile>(f)?.into_scene()?;
                let rs = RenderScene::new(&scene, &catalog)?;
                let (full, pairs) = render_masks(&rs);
                Ok(scene_metrics(&scene, &full, &pairs, config))
            })
            .collect()
    })?;
    let mut acc = MetricsAccumulator::new();
    for m in per_scene {
        acc.add(&m?);
    }
    Ok(AnalysisReport {
        scene_files: files.len(),
        metrics: acc.finish(),
    })
}
