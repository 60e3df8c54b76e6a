//! Random search over layout parameters against metric targets.
//!
//! Candidate 0 is the base configuration. Candidate `k ≥ 1` combines the
//! `(k-1) mod D`-th entry of the discrete design space (placement varies
//! fastest) with continuous perturbations drawn from a stream keyed by
//! `(seed, k)`. The first `D` candidates after the base are unperturbed, so
//! a small budget still sweeps the discrete choices. Because candidate `k`
//! depends only on `(seed, k)`, a larger budget evaluates a superset and
//! never returns a worse best score.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::ModelCatalog;
use crate::dataset::{evaluate_dataset, DatasetEvaluation};
use crate::error::SceneError;
use crate::metrics::{MetricsConfig, ProxyMetrics};
use crate::scene::rng::{derive_seed, scene_rng};
use crate::scene::sampling::uniform;
use crate::scene::{BackgroundSpec, LayoutParams, Placement, RotationAxes, ScaleMode};

const SCENE_SEED_LABEL: u64 = 0x5CE4E;
const PERTURB_SEED_LABEL: u64 = 0x9E27;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricWeights {
    pub occlusion: f64,
    pub scale: f64,
    pub count: f64,
    pub coverage: f64,
}

impl Default for MetricWeights {
    fn default() -> Self {
        MetricWeights {
            occlusion: 1.0,
            scale: 1.0,
            count: 1.0,
            coverage: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTarget {
    pub avg_occlusion: f64,
    pub scale_dist: [f64; 3],
    pub object_count: f64,
    /// Minimum fraction of viewpoints in the top and bottom elevation bins.
    pub polar_coverage: f64,
    #[serde(default)]
    pub weights: MetricWeights,
}

impl MetricTarget {
    pub fn validate(&self) -> Result<(), SceneError> {
        let w = &self.weights;
        let ws = [w.occlusion, w.scale, w.count, w.coverage];
        let bad = |m: String| Err(SceneError::InvalidParams(m));
        if ws.iter().any(|x| !(*x >= 0.0 && x.is_finite())) || ws.iter().all(|x| *x == 0.0) {
            return bad(format!("weights must be nonnegative and not all zero: {ws:?}"));
        }
        if (self.scale_dist.iter().sum::<f64>() - 1.0).abs() > 1e-9 || self.scale_dist.iter().any(|x| *x < 0.0) {
            return bad(format!("target scale_dist {:?} must be a distribution", self.scale_dist));
        }
        if !(self.object_count > 0.0) {
            return bad("target object_count must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.avg_occlusion) || !(0.0..=1.0).contains(&self.polar_coverage) {
            return bad("target occlusion and coverage must lie in [0, 1]".into());
        }
        Ok(())
    }

    /// Reference dataset profiles: object count, occlusion and
    /// small/medium/large fractions. Coverage is unweighted.
    pub fn reference_profiles() -> Vec<(&'static str, MetricTarget)> {
        let row = |count, occ: Option<f64>, s: [f64; 3]| MetricTarget {
            avg_occlusion: occ.unwrap_or(0.0),
            scale_dist: s,
            object_count: count,
            polar_coverage: 0.0,
            weights: MetricWeights {
                occlusion: if occ.is_some() { 1.0 } else { 0.0 },
                coverage: 0.0,
                ..Default::default()
            },
        };
        vec![
            ("scenenet_rgbd", row(5.41, None, [0.45, 0.40, 0.15])),
            ("random_placement", row(8.73, Some(0.19), [0.18, 0.52, 0.30])),
            ("occlusion", row(7.73, Some(0.32), [0.23, 0.48, 0.29])),
            ("scale_distribution", row(8.47, Some(0.33), [0.32, 0.37, 0.31])),
            ("rotation", row(8.10, Some(0.33), [0.35, 0.36, 0.29])),
            ("scenenet_background", row(8.72, Some(0.37), [0.38, 0.34, 0.28])),
            ("more_objects", row(13.72, Some(0.38), [0.33, 0.39, 0.28])),
        ]
    }

    pub fn reference_profile(name: &str) -> Option<MetricTarget> {
        Self::reference_profiles().into_iter().find(|(n, _)| *n == name).map(|(_, t)| t)
    }
}

/// Weighted distance from `target`. Missing metrics make any term with a
/// positive weight infinite.
pub fn score(metrics: &ProxyMetrics, target: &MetricTarget) -> f64 {
    let w = &target.weights;
    let term = |weight: f64, value: Option<f64>| -> f64 {
        if weight == 0.0 {
            0.0
        } else {
            value.map_or(f64::INFINITY, |v| weight * v)
        }
    };
    let occ = term(w.occlusion, metrics.avg_occlusion.map(|o| (o - target.avg_occlusion).abs()));
    let scale = term(
        w.scale,
        metrics
            .scale_dist
            .map(|s| s.iter().zip(&target.scale_dist).map(|(a, b)| (a - b).abs()).sum()),
    );
    let count = term(
        w.count,
        metrics.object_count.map(|c| (c - target.object_count).abs() / target.object_count),
    );
    let coverage = term(
        w.coverage,
        metrics.polar_coverage.map(|c| (target.polar_coverage - c).max(0.0)),
    );
    occ + scale + count + coverage
}

/// Discrete design choices the search enumerates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub placements: Vec<Placement>,
    pub rotation_axes: Vec<RotationAxes>,
    pub scale_modes: Vec<ScaleMode>,
    pub backgrounds: Vec<BackgroundSpec>,
    /// Perturb interval probabilities, occlusion probability and object
    /// count on candidates past the first sweep.
    pub perturb: bool,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            placements: vec![Placement::RandomFloor, Placement::OcclusionAware, Placement::Floating],
            rotation_axes: vec![RotationAxes::ZOnly, RotationAxes::AllAxes],
            scale_modes: vec![ScaleMode::default_uniform(), ScaleMode::small_biased_intervals()],
            backgrounds: vec![BackgroundSpec::WhiteCube { side: 10.0 }, BackgroundSpec::room_shell()],
            perturb: true,
        }
    }
}

impl SearchSpace {
    pub fn size(&self) -> usize {
        self.placements.len().max(1)
            * self.rotation_axes.len().max(1)
            * self.scale_modes.len().max(1)
            * self.backgrounds.len().max(1)
    }

    /// Applies the `i`-th discrete combination; empty dimensions keep the
    /// base value.
    fn apply(&self, i: usize, p: &mut LayoutParams) {
        let mut i = i;
        let mut pick = |len: usize| {
            let len = len.max(1);
            let r = i % len;
            i /= len;
            r
        };
        let (a, b, c, d) = (
            pick(self.placements.len()),
            pick(self.rotation_axes.len()),
            pick(self.scale_modes.len()),
            pick(self.backgrounds.len()),
        );
        if let Some(v) = self.placements.get(a) {
            p.placement = *v;
        }
        if let Some(v) = self.rotation_axes.get(b) {
            p.rotation_axes = *v;
        }
        if let Some(v) = self.scale_modes.get(c) {
            p.scale_mode = v.clone();
        }
        if let Some(v) = self.backgrounds.get(d) {
            p.background = v.clone();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub budget: usize,
    pub scenes_per_eval: u64,
    pub seed: u64,
    /// Resolution used while searching; thresholds are rescaled to match.
    pub search_resolution: Option<(u32, u32)>,
    /// Scenes for the final re-evaluation of the best candidate at the base
    /// resolution; 0 skips it.
    pub final_scenes: u64,
    pub metrics: MetricsConfig,
    pub space: SearchSpace,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budget: 20,
            scenes_per_eval: 50,
            seed: 0,
            search_resolution: Some((160, 120)),
            final_scenes: 50,
            metrics: MetricsConfig::default(),
            space: SearchSpace::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub index: usize,
    pub params_digest: String,
    pub params: LayoutParams,
    pub metrics: Option<ProxyMetrics>,
    pub failed_scenes: u64,
    /// `None` when the candidate could not be evaluated (infinite score).
    pub score: Option<f64>,
}

impl CandidateRecord {
    pub fn score_value(&self) -> f64 {
        self.score.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub target: MetricTarget,
    pub config: SearchConfig,
    /// Every candidate in index order.
    pub trace: Vec<CandidateRecord>,
    /// Best score after each candidate.
    pub best_so_far: Vec<Option<f64>>,
    pub best_index: usize,
    pub final_evaluation: Option<DatasetEvaluation>,
    pub final_score: Option<f64>,
}

impl SearchReport {
    pub fn best(&self) -> &CandidateRecord {
        &self.trace[self.best_index]
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Layout parameters of candidate `k`.
pub fn candidate(base: &LayoutParams, space: &SearchSpace, seed: u64, k: usize) -> LayoutParams {
    let mut p = base.clone();
    if k == 0 {
        return p;
    }
    let d = space.size();
    space.apply((k - 1) % d, &mut p);
    if space.perturb && k > d {
        let mut rng = scene_rng(derive_seed(seed, PERTURB_SEED_LABEL), k as u64);
        perturb(&mut p, &mut rng);
    }
    p
}

fn perturb<R: Rng + ?Sized>(p: &mut LayoutParams, rng: &mut R) {
    if let ScaleMode::Intervals { intervals } = &mut p.scale_mode {
        let weights: Vec<f64> = intervals
            .iter()
            .map(|iv| iv.probability * uniform(rng, 0.5, 1.5))
            .collect();
        let total: f64 = weights.iter().sum();
        if total > 0.0 {
            for (iv, w) in intervals.iter_mut().zip(&weights) {
                iv.probability = w / total;
            }
            // Absorb rounding so the sum is 1 to within validation tolerance.
            let drift: f64 = 1.0 - intervals.iter().map(|iv| iv.probability).sum::<f64>();
            if let Some(last) = intervals.last_mut() {
                last.probability = (last.probability + drift).max(0.0);
            }
        }
    }
    p.occlusion_probability = uniform(rng, 0.3, 1.0);
    let factor = uniform(rng, 0.5, 2.0);
    p.target_object_count = ((p.target_object_count as f64 * factor).round() as u32).max(1);
}

fn evaluate_candidate(
    index: usize,
    params: LayoutParams,
    target: &MetricTarget,
    config: &SearchConfig,
    catalog: &ModelCatalog,
    scene_seed: u64,
) -> CandidateRecord {
    let params_digest = params.digest();
    let mut run = params.clone();
    run.seed = scene_seed;
    let mut metrics_cfg = config.metrics;
    if let Some((w, h)) = config.search_resolution {
        metrics_cfg.thresholds = metrics_cfg
            .thresholds
            .rescaled((run.image_width, run.image_height), (w, h));
        run.image_width = w;
        run.image_height = h;
    }
    if run.validate().is_err() {
        return CandidateRecord {
            index,
            params_digest,
            params,
            metrics: None,
            failed_scenes: config.scenes_per_eval,
            score: None,
        };
    }
    let eval = evaluate_dataset(&run, catalog, config.scenes_per_eval, &metrics_cfg);
    let s = if eval.metrics.is_empty() {
        f64::INFINITY
    } else {
        score(&eval.metrics, target)
    };
    CandidateRecord {
        index,
        params_digest,
        params,
        metrics: Some(eval.metrics),
        failed_scenes: eval.failed_scenes,
        score: finite(s),
    }
}

/// Evaluates `config.budget` candidates on common scene seeds and returns
/// the full report. Candidates run in parallel; the report is ordered by
/// candidate index.
pub fn search(
    target: &MetricTarget,
    base: &LayoutParams,
    catalog: &ModelCatalog,
    config: &SearchConfig,
) -> Result<SearchReport, SceneError> {
    target.validate()?;
    base.validate()?;
    config.metrics.thresholds.validate()?;
    if config.budget < 1 {
        return Err(SceneError::InvalidParams("search budget must be at least 1".into()));
    }
    if config.scenes_per_eval < 1 {
        return Err(SceneError::InvalidParams("scenes_per_eval must be at least 1".into()));
    }
    let scene_seed = derive_seed(config.seed, SCENE_SEED_LABEL);
    let trace: Vec<CandidateRecord> = (0..config.budget)
        .into_par_iter()
        .map(|k| {
            let params = candidate(base, &config.space, config.seed, k);
            evaluate_candidate(k, params, target, config, catalog, scene_seed)
        })
        .collect();

    let mut best_index = 0;
    let mut best_so_far = Vec::with_capacity(trace.len());
    for (k, c) in trace.iter().enumerate() {
        if c.score_value() < trace[best_index].score_value() {
            best_index = k;
        }
        best_so_far.push(trace[best_index].score);
    }

    let (final_evaluation, final_score) = if config.final_scenes > 0 && trace[best_index].score.is_some() {
        let mut run = trace[best_index].params.clone();
        run.seed = scene_seed;
        let eval = evaluate_dataset(&run, catalog, config.final_scenes, &config.metrics);
        let s = if eval.metrics.is_empty() {
            None
        } else {
            finite(score(&eval.metrics, target))
        };
        (Some(eval), s)
    } else {
        (None, None)
    };

    Ok(SearchReport {
        target: target.clone(),
        config: config.clone(),
        trace,
        best_so_far,
        best_index,
        final_evaluation,
        final_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ViewpointHistogram;

    fn metrics(occ: f64, scale: [f64; 3], count: f64, cov: f64) -> ProxyMetrics {
        ProxyMetrics {
            scenes: 1,
            object_count: Some(count),
            avg_occlusion: Some(occ),
            scale_dist: Some(scale),
            polar_coverage: Some(cov),
            visible_instances: 1,
            out_of_frame_instances: 0,
            fully_occluded_instances: 0,
            viewpoint_hist: ViewpointHistogram::default(),
        }
    }

    fn target() -> MetricTarget {
        MetricTarget {
            avg_occlusion: 0.3,
            scale_dist: [0.2, 0.5, 0.3],
            object_count: 8.0,
            polar_coverage: 0.1,
            weights: MetricWeights::default(),
        }
    }

    #[test]
    fn exact_match_scores_zero() {
        let t = target();
        assert_eq!(score(&metrics(0.3, [0.2, 0.5, 0.3], 8.0, 0.1), &t), 0.0);
        // Coverage above the target is not penalized.
        assert_eq!(score(&metrics(0.3, [0.2, 0.5, 0.3], 8.0, 0.4), &t), 0.0);
    }

    #[test]
    fn single_term() {
        let t = MetricTarget {
            weights: MetricWeights {
                occlusion: 1.0,
                scale: 0.0,
                count: 0.0,
                coverage: 0.0,
            },
            ..target()
        };
        let s = score(&metrics(0.4, [1.0, 0.0, 0.0], 3.0, 0.0), &t);
        assert!((s - 0.1).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_score() {
        let t = MetricTarget {
            weights: MetricWeights {
                occlusion: 2.0,
                scale: 0.5,
                count: 3.0,
                coverage: 4.0,
            },
            ..target()
        };
        let m = metrics(0.25, [0.3, 0.4, 0.3], 10.0, 0.05);
        // 2·0.05 + 0.5·(0.1 + 0.1 + 0) + 3·(2/8) + 4·0.05
        let expected = 0.1 + 0.1 + 0.75 + 0.2;
        assert!((score(&m, &t) - expected).abs() < 1e-12);
    }

    #[test]
    fn invalid_targets_are_rejected() {
        let mut t = target();
        t.scale_dist = [0.5, 0.5, 0.5];
        assert!(t.validate().is_err());
        let mut t = target();
        t.weights = MetricWeights {
            occlusion: 0.0,
            scale: 0.0,
            count: 0.0,
            coverage: 0.0,
        };
        assert!(t.validate().is_err());
        for (_, t) in MetricTarget::reference_profiles() {
            t.validate().unwrap();
        }
    }

    #[test]
    fn candidates_are_keyed_by_seed_and_index() {
        let base = LayoutParams::default();
        let space = SearchSpace::default();
        assert_eq!(candidate(&base, &space, 1, 0), base);
        assert_eq!(candidate(&base, &space, 1, 1).placement, Placement::RandomFloor);
        assert_eq!(candidate(&base, &space, 1, 2).placement, Placement::OcclusionAware);
        let k = space.size() + 5;
        assert_eq!(candidate(&base, &space, 1, k), candidate(&base, &space, 1, k));
        assert_ne!(candidate(&base, &space, 1, k), candidate(&base, &space, 2, k));
        for k in 0..3 * space.size() {
            candidate(&base, &space, 3, k).validate().unwrap();
        }
    }

    fn small_config(budget: usize) -> SearchConfig {
        SearchConfig {
            budget,
            scenes_per_eval: 4,
            seed: 5,
            search_resolution: Some((64, 48)),
            final_scenes: 0,
            ..Default::default()
        }
    }

    #[test]
    fn budget_one_evaluates_only_the_base() {
        let cat = ModelCatalog::primitives();
        let base = LayoutParams::default();
        let r = search(&target(), &base, &cat, &small_config(1)).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.trace[0].params, base);
        assert_eq!(r.best_index, 0);
    }

    #[test]
    fn best_is_minimum_of_trace() {
        let cat = ModelCatalog::primitives();
        let r = search(&target(), &LayoutParams::default(), &cat, &small_config(6)).unwrap();
        assert_eq!(r.trace.len(), 6);
        let min = r.trace.iter().map(|c| c.score_value()).fold(f64::INFINITY, f64::min);
        assert_eq!(r.best().score_value(), min);
        assert_eq!(*r.best_so_far.last().unwrap(), r.best().score);
    }

    #[test]
    fn zero_budget_is_rejected() {
        let cat = ModelCatalog::primitives();
        assert!(search(&target(), &LayoutParams::default(), &cat, &small_config(0)).is_err());
    }
}
