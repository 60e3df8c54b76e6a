#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use synthlayout::catalog::{ModelCatalog, Primitive};
use synthlayout::geometry::{nearest_hit_in_range, Camera, Rotation, TriangleGroup, Vec3};
use synthlayout::pretrain::*;
use synthlayout::raster::RenderScene;
use synthlayout::scene::rng::scene_rng;
use synthlayout::scene::{BackgroundShell, ObjectInstance, Scene};

/// Per-pixel nearest-hit labels by ray casting through each pixel center.
/// The ray's distance window is the near/far depth range stretched by the
/// pixel direction's length, so it clips at the same planes as the z-buffer.
pub fn ray_cast_labels(scene: &RenderScene) -> Vec<u16> {
    let view = scene.camera.view();
    let groups: Vec<TriangleGroup> = scene.groups().cloned().collect();
    let (w, h) = (scene.camera.width, scene.camera.height);
    let mut out = Vec::with_capacity((w * h) as usize);
    for row in 0..h {
        for col in 0..w {
            let (px, py) = (col as f64 + 0.5, row as f64 + 0.5);
            let stretch = view.direction_through(px, py).norm();
            let ray = view.ray_through(px, py);
            let hit = nearest_hit_in_range(&ray, &groups, view.near * stretch, view.far * stretch);
            out.push(hit.map_or(0, |h| h.id as u16));
        }
    }
    out
}

pub fn cube_catalog() -> ModelCatalog {
    let mut cat = ModelCatalog::new();
    cat.add_primitive("cube", Primitive::Box { size: [1.0; 3] });
    cat
}

pub fn unit_cube_at(cat: &ModelCatalog, at: Vec3) -> ObjectInstance {
    let m = cat.get("cube").unwrap();
    ObjectInstance {
        model_id: "cube".into(),
        translation: at,
        rotation: Rotation::IDENTITY,
        scale: 1.0,
        world_aabb: m.mesh.bounds().transformed(Rotation::IDENTITY, 1.0, at),
    }
}

/// Objects on an empty background seen by `camera`.
pub fn bare_scene(instances: Vec<ObjectInstance>, camera: Camera) -> Scene {
    Scene {
        background: BackgroundShell::empty(),
        instances,
        camera,
        light_anchor: None,
        seed: 0,
        stream: 0,
        params_digest: String::new(),
    }
}

/// Camera at the origin looking along +y, 128×128.
pub fn forward_camera() -> Camera {
    Camera::new(Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0), Vec3::Z, 60.0, 128, 128, 0.05, 100.0).unwrap()
}

/// Instance 1 is a unit cube whose left half is covered by instance 2.
pub fn half_occlusion_scene() -> (Scene, ModelCatalog) {
    let cat = cube_catalog();
    // A's front face sits at depth 2.5; B's front face at 1.25 with its right
    // face in the plane x = 0, so B hides exactly the half of A left of the
    // optical axis.
    let a = unit_cube_at(&cat, Vec3::new(0.0, 3.0, 0.0));
    let b = unit_cube_at(&cat, Vec3::new(-0.5, 1.75, 0.0));
    (bare_scene(vec![a, b], forward_camera()), cat)
}

/// Loss straight from the definition, no log-sum-exp shift.
pub fn naive_loss(ks: &[Vec<f64>], cs: &[u32], qs: &[Vec<f64>], tau: f64) -> f64 {
    ks.iter()
        .zip(cs)
        .map(|(k, &c)| {
            let s = |q: &Vec<f64>| (k.iter().zip(q).map(|(a, b)| a * b).sum::<f64>() / tau).exp();
            let denom: f64 = qs.iter().map(s).sum();
            -(s(&qs[c as usize]) / denom).ln()
        })
        .sum()
}

pub fn random_instance(seed: u64, m: usize, n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<u32>, MemoryBank) {
    let mut rng = scene_rng(seed, 0);
    let bank = MemoryBank::random(n, dim, 0.2, 0.999, &mut rng).unwrap();
    let ks = (0..m).map(|_| random_unit(dim, &mut rng)).collect();
    let cs = (0..m).map(|_| rng.random_range(0..n as u32)).collect();
    (ks, cs, bank)
}

/// Worst relative gap between the analytic gradient and central finite
/// differences on a random 5-region, 8-object instance.
pub fn max_fd_error(seed: u64) -> f64 {
    let (ks, cs, bank) = random_instance(seed, 5, 8, 12);
    let batch = RegionBatch::new(ks.clone(), cs.clone()).unwrap();
    let (loss, grads) = contrastive_loss(&batch, &bank).unwrap();
    assert!((loss - naive_loss(&ks, &cs, bank.entries(), 0.2)).abs() < 1e-10);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..ks.len() {
        for d in 0..ks[i].len() {
            let mut plus = ks.clone();
            let mut minus = ks.clone();
            plus[i][d] += h;
            minus[i][d] -= h;
            let fd = (naive_loss(&plus, &cs, bank.entries(), 0.2) - naive_loss(&minus, &cs, bank.entries(), 0.2)) / (2.0 * h);
            let g = grads[i][d];
            worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-8));
        }
    }
    worst
}

/// Per-step, per-worker query ids drawn uniformly without repetition.
pub fn schedule(seed: u64, steps: usize, workers: usize, per_worker: usize, objects: u32) -> Vec<Vec<Vec<u32>>> {
    let mut rng = scene_rng(seed, 1);
    let universe: BTreeSet<u32> = (0..objects).collect();
    (0..steps)
        .map(|_| {
            (0..workers)
                .map(|_| sample_queries(&BTreeSet::new(), &universe, per_worker, &mut rng).unwrap())
                .collect()
        })
        .collect()
}

/// Loss of one region orthogonal to all `n` bank entries.
pub fn uniform_similarity_loss(n: usize) -> f64 {
    // Region along axis 0, bank entries on the other axes.
    let dim = n + 1;
    let entries: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..dim).map(|d| if d == j + 1 { 1.0 } else { 0.0 }).collect())
        .collect();
    let bank = MemoryBank::new(entries, 0.2, 0.999, true).unwrap();
    let k: Vec<f64> = (0..dim).map(|d| if d == 0 { 1.0 } else { 0.0 }).collect();
    let batch = RegionBatch::new(vec![k], vec![0]).unwrap();
    contrastive_loss(&batch, &bank).unwrap().0
}

/// The single-worker schedule issuing every worker's ids of a step in
/// worker order. Concatenation may repeat ids across workers; a single
/// worker cannot hold duplicates, so the last occurrence of each id is kept.
pub fn concatenate_workers(schedule: &[Vec<Vec<u32>>]) -> Vec<Vec<Vec<u32>>> {
    schedule
        .iter()
        .map(|s| {
            let ids = s.concat();
            let kept: Vec<u32> = ids
                .iter()
                .enumerate()
                .filter(|(i, id)| !ids[i + 1..].contains(id))
                .map(|(_, id)| *id)
                .collect();
            vec![kept]
        })
        .collect()
}
