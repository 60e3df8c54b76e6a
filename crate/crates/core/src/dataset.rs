//! Dataset-level evaluation: assemble, rasterize and measure many scenes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::ModelCatalog;
use crate::metrics::{analyze_scene, MetricsAccumulator, MetricsConfig, ProxyMetrics};
use crate::raster::{rasterize, RenderScene};
use crate::scene::{assemble_indexed, LayoutParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEvaluation {
    pub metrics: ProxyMetrics,
    /// Scenes that could not be assembled and were skipped.
    pub failed_scenes: u64,
}

/// Measures scenes `0..scenes` of the dataset defined by `params`. Scenes are
/// processed in parallel; the result does not depend on the thread count.
pub fn evaluate_dataset(
    params: &LayoutParams,
    catalog: &ModelCatalog,
    scenes: u64,
    config: &MetricsConfig,
) -> DatasetEvaluation {
    let (acc, failed) = (0..scenes)
        .into_par_iter()
        .map(|i| {
            assemble_indexed(params, catalog, i)
                .and_then(|s| analyze_scene(&s, catalog, config))
                .ok()
        })
        .fold(
            || (MetricsAccumulator::new(), 0u64),
            |(mut acc, failed), m| match m {
                Some(m) => {
                    acc.add(&m);
                    (acc, failed)
                }
                None => (acc, failed + 1),
            },
        )
        .reduce(
            || (MetricsAccumulator::new(), 0u64),
            |(mut a, fa), (b, fb)| {
                a.merge(&b);
                (a, fa + fb)
            },
        );
    DatasetEvaluation {
        metrics: acc.finish(),
        failed_scenes: failed,
    }
}

/// Catalog indices of the visible objects in each of scenes `0..scenes`,
/// one entry per visible instance, in instance order. Scenes that fail to
/// assemble are skipped.
pub fn visible_models(params: &LayoutParams, catalog: &ModelCatalog, scenes: u64) -> Vec<Vec<u32>> {
    (0..scenes)
        .into_par_iter()
        .filter_map(|i| {
            let scene = assemble_indexed(params, catalog, i).ok()?;
            let rs = RenderScene::new(&scene, catalog).ok()?;
            let counts = rasterize(&rs, None).label_counts();
            Some(
                counts
                    .keys()
                    .map(|&l| {
                        let inst = &scene.instances[l as usize - 1];
                        catalog.index_of(&inst.model_id).expect("instance model is in the catalog") as u32
                    })
                    .collect(),
            )
        })
        .collect()
}
