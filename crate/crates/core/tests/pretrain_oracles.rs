use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::Rng;
use synthlayout::pretrain::*;
use synthlayout::scene::rng::scene_rng;

mod common;
use common::*;

#[test]
fn gradient_matches_central_differences() {
    let worst = (0..100).map(max_fd_error).fold(0.0, f64::max);
    assert!(worst < 1e-4, "max relative error {worst}");
}

#[test]
fn uniform_similarities_give_log_n() {
    for n in [2usize, 3, 10, 64] {
        let loss = uniform_similarity_loss(n);
        assert!((loss - (n as f64).ln()).abs() < 1e-12, "n={n}");
    }
}

#[test]
fn momentum_converges_geometrically() {
    let mut rng = scene_rng(3, 0);
    let k: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
    let q0: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
    let d0 = q0.iter().zip(&k).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let mut q = q0;
    for t in 1..=1000 {
        q = momentum_update(&q, &k, 0.999).unwrap();
        let d = q.iter().zip(&k).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!((d - 0.999f64.powi(t) * d0).abs() < 1e-12, "step {t}");
    }
}

#[test]
fn four_workers_equal_one_worker_with_concatenated_queries() {
    let cfg = PretrainConfig {
        objects: 30,
        dim: 16,
        ..Default::default()
    };
    let four = schedule(8, 40, 4, 5, 30);
    let a = simulate_bank_schedule(&cfg, &four);
    let dedup = concatenate_workers(&four);
    let b = simulate_bank_schedule(&cfg, &dedup).unwrap();
    assert_eq!(a.unwrap().fingerprint(), b.fingerprint());
}

#[test]
fn replicas_agree_for_every_worker_count() {
    let cfg = PretrainConfig {
        objects: 40,
        dim: 8,
        ..Default::default()
    };
    for w in [1, 2, 4, 8] {
        assert!(simulate_bank_schedule(&cfg, &schedule(w as u64, 25, w, 4, 40)).is_ok());
    }
}

#[test]
fn zero_noise_ground_truth_start_is_a_fixed_point() {
    let cfg = PretrainConfig {
        objects: 20,
        dim: 32,
        steps: 60,
        noise: 0.0,
        bank_init: BankInit::GroundTruth,
        ..Default::default()
    };
    let scenes: Vec<Vec<u32>> = (0..20).map(|i| (0..(i % 5 + 1)).map(|j| (i + 3 * j) % 20).collect()).collect();
    let trace = simulate_pretrain(&scenes, &cfg).unwrap();
    let first = trace.rows[0].mean_loss.unwrap();
    for r in &trace.rows {
        assert!((r.mean_loss.unwrap() - first).abs() < 1e-12);
    }
}

#[test]
fn loss_decreases_over_training() {
    let mut rng = scene_rng(12, 0);
    let scenes: Vec<Vec<u32>> = (0..200)
        .map(|_| (0..rng.random_range(1..8)).map(|_| rng.random_range(0..25)).collect())
        .collect();
    let trace = simulate_pretrain(&scenes, &PretrainConfig::default()).unwrap();
    let early = trace.window_mean(0..50).unwrap();
    let late = trace.window_mean(450..500).unwrap();
    assert!(late < early, "early {early} late {late}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_is_nonnegative_and_permutation_invariant(seed in any::<u64>(), shift in 1usize..8) {
        let (ks, cs, bank) = random_instance(seed, 4, 8, 6);
        let batch = RegionBatch::new(ks.clone(), cs.clone()).unwrap();
        let (loss, _) = contrastive_loss(&batch, &bank).unwrap();
        prop_assert!(loss >= 0.0);
        // Rotate bank entries and relabel the regions to match.
        let n = bank.len();
        let mut entries = vec![Vec::new(); n];
        for (j, e) in bank.entries().iter().enumerate() {
            entries[(j + shift) % n] = e.clone();
        }
        let permuted = MemoryBank::new(entries, 0.2, 0.999, true).unwrap();
        let relabeled: Vec<u32> = cs.iter().map(|c| ((*c as usize + shift) % n) as u32).collect();
        let (loss2, _) = contrastive_loss(&RegionBatch::new(ks, relabeled).unwrap(), &permuted).unwrap();
        prop_assert!((loss - loss2).abs() < 1e-12 * loss.max(1.0));
    }

    #[test]
    fn scaling_similarities_equals_dividing_temperature(seed in any::<u64>(), s in 0.1f64..5.0) {
        let (ks, cs, bank) = random_instance(seed, 3, 6, 5);
        let scaled: Vec<Vec<f64>> = ks.iter().map(|k| k.iter().map(|x| x * s).collect()).collect();
        let (a, _) = contrastive_loss(&RegionBatch::new(scaled, cs.clone()).unwrap(), &bank).unwrap();
        let hot = MemoryBank::new(bank.entries().to_vec(), 0.2 / s, 0.999, true).unwrap();
        let (b, _) = contrastive_loss(&RegionBatch::new(ks, cs).unwrap(), &hot).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn sampled_queries_are_unique_with_requested_length(seed in any::<u64>(), n in 0usize..10, vis in proptest::collection::btree_set(0u32..12, 0..12)) {
        let universe: BTreeSet<u32> = (0..12).collect();
        let q = sample_queries(&vis, &universe, n, &mut scene_rng(seed, 0)).unwrap();
        prop_assert_eq!(q.len(), n);
        prop_assert_eq!(q.iter().collect::<BTreeSet<_>>().len(), n);
        if vis.len() >= n {
            prop_assert!(q.iter().all(|id| vis.contains(id)));
        } else {
            prop_assert!(vis.iter().all(|id| q.contains(id)));
        }
    }
}
