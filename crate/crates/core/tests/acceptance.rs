//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails at
//! the end if any criterion failed.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture` to see
//! the report.

mod common;

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use synthlayout::catalog::ModelCatalog;
use synthlayout::dataset::{evaluate_dataset, visible_models};
use synthlayout::geometry::Vec3;
use synthlayout::io::{generate, CatalogSpec, GenerateOptions};
use synthlayout::metrics::{occlusion_of, MetricsConfig, ProxyMetrics};
use synthlayout::pretrain::*;
use synthlayout::raster::{mask_pairs, rasterize, RenderScene};
use synthlayout::scene::presets::{preset, presets};
use synthlayout::scene::rng::scene_rng;
use synthlayout::scene::{assemble_indexed, LayoutParams, Placement};
use synthlayout::search::{search, MetricTarget, MetricWeights, SearchConfig, SearchSpace};

use common::*;

struct Report {
    results: Vec<(u32, bool)>,
}

impl Report {
    fn record(&mut self, id: u32, name: &str, pass: bool, detail: String, started: Instant) {
        println!(
            "{} [{id}] {name}: {detail} ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
        self.results.push((id, pass));
    }
}

fn raster_oracle(r: &mut Report) {
    let t = Instant::now();
    let cat = ModelCatalog::primitives();
    let all = presets();
    let (mut scenes, mut mismatched, mut attempt) = (0, 0usize, 0u64);
    let mut max_objects = 0;
    while scenes < 200 {
        let mut params = all[attempt as usize % all.len()].params.clone();
        params.image_width = 64;
        params.image_height = 64;
        params.target_object_count = 10;
        params.seed = 500 + attempt;
        attempt += 1;
        let Ok(scene) = assemble_indexed(&params, &cat, 0) else { continue };
        max_objects = max_objects.max(scene.instances.len());
        let rs = RenderScene::new(&scene, &cat).unwrap();
        let got = rasterize(&rs, None);
        let want = ray_cast_labels(&rs);
        mismatched += got.labels().iter().zip(&want).filter(|(a, b)| a != b).count();
        scenes += 1;
    }
    let secs = t.elapsed().as_secs_f64();
    r.record(
        1,
        "rasterizer matches ray casting",
        mismatched == 0 && max_objects <= 10 && secs < 120.0,
        format!("{mismatched} mismatched pixels over {scenes} scenes of at most {max_objects} objects, 64x64"),
        t,
    );
}

fn occlusion_formula(r: &mut Report) {
    let t = Instant::now();
    let (scene, cat) = half_occlusion_scene();
    let half = occlusion_of(&mask_pairs(&RenderScene::new(&scene, &cat).unwrap())[0]).unwrap();

    let lone = bare_scene(vec![unit_cube_at(&cat, Vec3::new(0.0, 3.0, 0.0))], forward_camera());
    let visible = occlusion_of(&mask_pairs(&RenderScene::new(&lone, &cat).unwrap())[0]).unwrap();

    // A cube directly behind a nearer cube of the same size.
    let hidden_scene = bare_scene(
        vec![
            unit_cube_at(&cat, Vec3::new(0.0, 6.0, 0.0)),
            unit_cube_at(&cat, Vec3::new(0.0, 2.0, 0.0)),
        ],
        forward_camera(),
    );
    let hidden_pair = mask_pairs(&RenderScene::new(&hidden_scene, &cat).unwrap())[0];
    let hidden = occlusion_of(&hidden_pair).unwrap();

    r.record(
        2,
        "occlusion formula",
        (half - 0.5).abs() <= 0.02 && visible == 0.0 && hidden == 1.0 && hidden_pair.n_f > 0,
        format!("half {half:.4} (0.5 +- 0.02), visible {visible}, hidden {hidden} with n_f {}", hidden_pair.n_f),
        t,
    );
}

/// Metrics over scenes `0..500`; scenes that fail to assemble are skipped
/// and counted in `failed`.
fn eval(params: &LayoutParams, cat: &ModelCatalog, failed: &mut u64) -> ProxyMetrics {
    let e = evaluate_dataset(params, cat, 500, &MetricsConfig::default());
    *failed += e.failed_scenes;
    e.metrics
}

fn directional(r: &mut Report) {
    let t = Instant::now();
    let cat = ModelCatalog::primitives();
    let p = |name: &str| preset(name).unwrap().params;
    let mut failed = 0;
    let random = eval(&p("random_placement"), &cat, &mut failed);
    let occl = eval(&p("occlusion"), &cat, &mut failed);
    let paired = eval(
        &LayoutParams {
            placement: Placement::OcclusionAware,
            ..p("random_placement")
        },
        &cat, &mut failed,
    );
    let scale = eval(&p("scale_distribution"), &cat, &mut failed);
    let rotation = eval(&p("rotation"), &cat, &mut failed);
    let background = eval(&p("scenenet_background"), &cat, &mut failed);
    let more = eval(&p("more_objects"), &cat, &mut failed);
    let floating_only = eval(
        &LayoutParams {
            placement: Placement::Floating,
            ..p("scenenet_background")
        },
        &cat, &mut failed,
    );

    let occ = |m: &ProxyMetrics| m.avg_occlusion.unwrap();
    let small = |m: &ProxyMetrics| m.scale_dist.unwrap()[0];
    let count = |m: &ProxyMetrics| m.object_count.unwrap();
    let polar = |m: &ProxyMetrics| m.polar_coverage.unwrap();

    let occ_gain = occ(&occl) - occ(&random);
    let paired_gain = occ(&paired) - occ(&random);
    let small_gain = small(&scale) - small(&occl);
    let count_gain = count(&more) - count(&background);
    let checks = [
        occ_gain >= 0.05,
        paired_gain > 0.0,
        small_gain >= 0.05,
        count_gain >= 2.0,
        polar(&scale) < 0.02,
        polar(&rotation) > 0.08,
    ];
    println!(
        "     occlusion {:.3} -> {:.3} (placement alone {:.3}); small fraction {:.3} -> {:.3}; \
         visible count {:.2} -> {:.2} (floating alone {:.2}); polar coverage {:.4} -> {:.4}",
        occ(&random),
        occ(&occl),
        occ(&paired),
        small(&occl),
        small(&scale),
        count(&background),
        count(&more),
        count(&floating_only),
        polar(&scale),
        polar(&rotation),
    );
    let secs = t.elapsed().as_secs_f64();
    r.record(
        3,
        "dataset metrics move in the expected directions",
        checks.iter().all(|&c| c) && secs < 900.0,
        format!(
            "occlusion +{occ_gain:.3} (>= 0.05), small +{small_gain:.3} (>= 0.05), count +{count_gain:.2} (>= 2.0), \
             polar {:.4} < 0.02 and {:.4} > 0.08, 500 scenes each, {failed} skipped",
            polar(&scale),
            polar(&rotation)
        ),
        t,
    );
}

fn contrastive_loss_checks(r: &mut Report) {
    let t = Instant::now();
    let worst_ln = [2usize, 3, 10, 64]
        .iter()
        .map(|&n| (uniform_similarity_loss(n) - (n as f64).ln()).abs())
        .fold(0.0, f64::max);
    let n2 = uniform_similarity_loss(2);
    let single = MemoryBank::new(vec![vec![0.6, 0.8]], 0.2, 0.999, true).unwrap();
    let batch = RegionBatch::new(vec![vec![1.0, 0.0]], vec![0]).unwrap();
    let (one, _) = contrastive_loss(&batch, &single).unwrap();
    let worst_fd = (0..100).map(max_fd_error).fold(0.0, f64::max);
    r.record(
        4,
        "contrastive loss",
        worst_ln < 1e-12 && one == 0.0 && worst_fd < 1e-4,
        format!("N=2 gives {n2:.9}, worst |loss - ln N| {worst_ln:.1e}, N=1 gives {one}, worst gradient error {worst_fd:.1e}"),
        t,
    );
}

fn momentum(r: &mut Report) {
    let t = Instant::now();
    let mut rng = scene_rng(3, 0);
    let k: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut q: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
    let dist = |q: &[f64]| q.iter().zip(&k).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let d0 = dist(&q);
    let mut worst: f64 = 0.0;
    for step in 1..=1000 {
        q = momentum_update(&q, &k, 0.999).unwrap();
        worst = worst.max((dist(&q) - 0.999f64.powi(step) * d0).abs());
    }
    r.record(
        5,
        "momentum update converges geometrically",
        worst < 1e-12,
        format!("worst deviation from 0.999^t |q0 - k| over 1000 steps {worst:.1e}"),
        t,
    );
}

fn bank_protocol(r: &mut Report) {
    let t = Instant::now();
    let cfg = PretrainConfig {
        objects: 40,
        dim: 16,
        ..Default::default()
    };
    let replicas_ok = [1usize, 2, 4, 8]
        .iter()
        .all(|&w| simulate_bank_schedule(&cfg, &schedule(w as u64, 30, w, 4, 40)).is_ok());

    // Simulation: four workers against one worker issuing the same ids.
    let four = schedule(8, 40, 4, 5, 40);
    let sim_equal = simulate_bank_schedule(&cfg, &four).unwrap().fingerprint()
        == simulate_bank_schedule(&cfg, &concatenate_workers(&four)).unwrap().fingerprint();

    // Protocol: one gather of explicit updates against the sequential reference.
    let mut rng = scene_rng(21, 0);
    let bank = MemoryBank::random(40, 16, 0.2, 0.999, &mut rng).unwrap();
    let mut workers: Vec<WorkerState> = (0..4).map(|i| WorkerState::new(i, bank.clone(), 5)).collect();
    let mut reference = bank.clone();
    let mut gather_equal = true;
    for step in &four {
        let updates: Vec<Vec<(u32, Embedding)>> = step
            .iter()
            .map(|ids| ids.iter().map(|&id| (id, random_unit(16, &mut rng))).collect())
            .collect();
        gather_and_update(&mut workers, &updates).unwrap();
        reference = sequential_reference(&reference, &updates.concat()).unwrap();
        gather_equal &= workers.iter().all(|w| w.bank.fingerprint() == reference.fingerprint());
    }
    r.record(
        6,
        "memory bank replicas",
        replicas_ok && sim_equal && gather_equal,
        format!(
            "replicas identical for W in 1,2,4,8: {replicas_ok}; W=4 equals sequential reference: \
             simulation {sim_equal}, gather {gather_equal}"
        ),
        t,
    );
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism(r: &mut Report) {
    let t = Instant::now();
    let cat = ModelCatalog::primitives();
    let params = LayoutParams {
        seed: 7,
        ..preset("scenenet_background").unwrap().params
    };
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, jobs: usize| {
        let dir = tmp.path().join(name);
        let opts = GenerateOptions {
            count: 40,
            jobs,
            ..Default::default()
        };
        generate(&params, &CatalogSpec::Primitives, &cat, &dir, &opts).unwrap();
        tree_bytes(&dir)
    };
    let a = run("a", 1);
    let b = run("b", 1);
    let c = run("c", 8);
    let files = a.len();
    r.record(
        7,
        "generation is deterministic",
        a == b && a == c && files > 40,
        format!("seed 7: repeat identical {}, jobs 8 identical to jobs 1 {}, {files} files", a == b, a == c),
        t,
    );
}

fn search_sanity(r: &mut Report) {
    let t = Instant::now();
    let cat = ModelCatalog::primitives();
    let base = preset("random_placement").unwrap().params;
    let target = MetricTarget {
        avg_occlusion: 0.33,
        weights: MetricWeights {
            occlusion: 1.0,
            scale: 0.0,
            count: 0.0,
            coverage: 0.0,
        },
        ..MetricTarget::reference_profile("occlusion").unwrap()
    };
    let config_seeded = |budget, seed| SearchConfig {
        budget,
        seed,
        space: SearchSpace {
            placements: vec![Placement::RandomFloor, Placement::OcclusionAware],
            rotation_axes: vec![],
            scale_modes: vec![],
            backgrounds: vec![],
            perturb: true,
        },
        ..Default::default()
    };
    let config = |budget| config_seeded(budget, 1);
    let full = search(&target, &base, &cat, &config(20)).unwrap();
    let best = full.best();
    let picks_aware = best.params.placement == Placement::OcclusionAware;

    let mut nested = true;
    let mut last = f64::INFINITY;
    for budget in [5, 10, 20] {
        let rep = if budget == 20 { full.clone() } else { search(&target, &base, &cat, &config(budget)).unwrap() };
        nested &= rep.trace.iter().zip(&full.trace).all(|(a, b)| a.params_digest == b.params_digest && a.score == b.score);
        let score = rep.best().score_value();
        nested &= score <= last;
        last = score;
    }
    // Other seeds, reported only.
    let aware_seeds = (2..=5)
        .filter(|&seed| {
            let rep = search(&target, &base, &cat, &config_seeded(20, seed)).unwrap();
            rep.best().params.placement == Placement::OcclusionAware
        })
        .count();
    nested &= full.best_so_far.windows(2).all(|w| w[1].unwrap_or(f64::INFINITY) <= w[0].unwrap_or(f64::INFINITY));
    r.record(
        8,
        "search finds the occlusion-aware layout",
        picks_aware && nested,
        format!(
            "seed 1 best candidate {} ({:?}, occlusion {:.3}, score {:.4}); seeds 2-5 picking occlusion_aware: \
             {aware_seeds} of 4; nested budgets 5/10/20 monotone: {nested}",
            best.index,
            best.params.placement,
            best.metrics.as_ref().and_then(|m| m.avg_occlusion).unwrap_or(f64::NAN),
            best.score_value()
        ),
        t,
    );
}

fn pretrain_convergence(r: &mut Report) {
    let t = Instant::now();
    let cat = ModelCatalog::primitives();
    let scenes = visible_models(&preset("random_placement").unwrap().params, &cat, 200);
    let cfg = PretrainConfig {
        objects: cat.len(),
        ..Default::default()
    };
    let trace = simulate_pretrain(&scenes, &cfg).unwrap();
    let early = trace.window_mean(0..50).unwrap();
    let late = trace.window_mean(450..500).unwrap();

    let flat_cfg = PretrainConfig {
        noise: 0.0,
        bank_init: BankInit::GroundTruth,
        ..cfg
    };
    let flat = simulate_pretrain(&scenes, &flat_cfg).unwrap();
    let first = flat.rows[0].mean_loss.unwrap();
    let spread = flat
        .rows
        .iter()
        .map(|row| (row.mean_loss.unwrap() - first).abs())
        .fold(0.0, f64::max);
    r.record(
        9,
        "simulated pretraining",
        trace.rows.len() == 500 && late < early && spread < 1e-12,
        format!("mean loss first 50 {early:.4}, last 50 {late:.4}; zero-noise ground-truth spread {spread:.1e}"),
        t,
    );
}

#[test]
fn acceptance() {
    let mut r = Report { results: Vec::new() };
    raster_oracle(&mut r);
    occlusion_formula(&mut r);
    directional(&mut r);
    contrastive_loss_checks(&mut r);
    momentum(&mut r);
    bank_protocol(&mut r);
    determinism(&mut r);
    search_sanity(&mut r);
    pretrain_convergence(&mut r);
    let failed: Vec<u32> = r.results.iter().filter(|(_, p)| !p).map(|(id, _)| *id).collect();
    println!("{} of {} criteria passed", r.results.len() - failed.len(), r.results.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
