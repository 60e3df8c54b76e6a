//! Deterministic stand-in for the pretraining loop. Each object has a fixed
//! ground-truth embedding. Region embeddings are the ground truth of their
//! object plus Gaussian noise; the query encoder is a per-object parameter
//! vector pulled toward the ground truth by momentum, and its outputs are
//! written into the bank for the objects each worker samples.

use std::collections::BTreeSet;
use std::io::{self, Write};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::protocol::{gather_and_update, sample_queries, WorkerState};
use super::{contrastive_loss, dot, l2_normalized, momentum_update, random_unit, Embedding, MemoryBank, RegionBatch};
use crate::error::PretrainError;
use crate::scene::rng::{derive_seed, scene_rng};

const TRUTH_LABEL: u64 = 0x7157;
const BANK_LABEL: u64 = 0xBA4C;
const NOISE_LABEL: u64 = 0x4015E;
const QUERY_LABEL: u64 = 0x9E4F;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BankInit {
    Random,
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PretrainConfig {
    /// Number of distinct objects (bank size).
    pub objects: usize,
    pub dim: usize,
    pub temperature: f64,
    pub momentum: f64,
    pub normalize: bool,
    pub steps: usize,
    pub workers: usize,
    /// Query objects each worker samples per step.
    pub queries_per_worker: usize,
    /// Target scenes each worker consumes per step.
    pub targets_per_worker: usize,
    /// Expected norm of the noise added to a region's ground-truth embedding.
    pub noise: f64,
    pub bank_init: BankInit,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            objects: 25,
            dim: super::DEFAULT_EMBEDDING_DIM,
            temperature: super::DEFAULT_TEMPERATURE,
            momentum: super::DEFAULT_MOMENTUM,
            normalize: true,
            steps: 500,
            workers: 4,
            queries_per_worker: 8,
            targets_per_worker: 2,
            noise: 0.5,
            bank_init: BankInit::Random,
            seed: 0,
        }
    }
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<(), PretrainError> {
        let bad = |m: &str| Err(PretrainError::InvalidConfig(m.to_string()));
        if self.objects == 0 || self.dim == 0 {
            return bad("objects and dim must be positive");
        }
        if self.workers == 0 || self.targets_per_worker == 0 {
            return bad("workers and targets_per_worker must be positive");
        }
        if self.queries_per_worker > self.objects {
            return bad("queries_per_worker exceeds the number of objects");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad("noise must be finite and nonnegative");
        }
        if !(self.temperature > 0.0) || !(0.0..=1.0).contains(&self.momentum) {
            return bad("need temperature > 0 and momentum in [0, 1]");
        }
        Ok(())
    }
}

/// Fixed per-object embeddings: orthonormal when `n <= dim`, otherwise
/// independent random unit vectors.
pub fn ground_truth_embeddings(n: usize, dim: usize, seed: u64) -> Vec<Embedding> {
    let mut rng = scene_rng(derive_seed(seed, TRUTH_LABEL), 0);
    let mut out: Vec<Embedding> = Vec::with_capacity(n);
    while out.len() < n {
        let mut v = random_unit(dim, &mut rng);
        if n <= dim {
            for u in &out {
                let p = dot(&v, u);
                for (a, b) in v.iter_mut().zip(u) {
                    *a -= p * b;
                }
            }
            if dot(&v, &v) < 1e-12 {
                continue;
            }
            v = l2_normalized(&v);
        }
        out.push(v);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    /// Mean per-region loss over all workers; `None` if no region was seen.
    pub mean_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainTrace {
    pub rows: Vec<TraceRow>,
    pub final_bank: MemoryBank,
}

impl PretrainTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "step,mean_loss")?;
        for r in &self.rows {
            match r.mean_loss {
                Some(l) => writeln!(w, "{},{}", r.step, l)?,
                None => writeln!(w, "{},", r.step)?,
            }
        }
        Ok(())
    }

    /// Mean of the defined losses in `rows[range]`.
    pub fn window_mean(&self, range: std::ops::Range<usize>) -> Option<f64> {
        let v: Vec<f64> = self.rows[range].iter().filter_map(|r| r.mean_loss).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Query-encoder parameters, ground truth and worker replicas.
struct Protocol {
    truth: Vec<Embedding>,
    query_params: Vec<Embedding>,
    momentum: f64,
    workers: Vec<WorkerState>,
}

impl Protocol {
    fn new(config: &PretrainConfig, workers: usize) -> Result<Self, PretrainError> {
        config.validate()?;
        let truth = ground_truth_embeddings(config.objects, config.dim, config.seed);
        let init = match config.bank_init {
            BankInit::GroundTruth => truth.clone(),
            BankInit::Random => {
                let mut rng = scene_rng(derive_seed(config.seed, BANK_LABEL), 0);
                (0..config.objects).map(|_| random_unit(config.dim, &mut rng)).collect()
            }
        };
        let bank = MemoryBank::new(init.clone(), config.temperature, config.momentum, config.normalize)?;
        let query_seed = derive_seed(config.seed, QUERY_LABEL);
        Ok(Protocol {
            truth,
            query_params: init,
            momentum: config.momentum,
            workers: (0..workers).map(|i| WorkerState::new(i, bank.clone(), query_seed)).collect(),
        })
    }

    /// Momentum step of the query encoder, then every worker writes the
    /// encoder output for its sampled ids and the replicas are gathered.
    fn advance(&mut self, sampled: &[Vec<u32>]) -> Result<(), PretrainError> {
        for (q, g) in self.query_params.iter_mut().zip(&self.truth) {
            *q = momentum_update(q, g, self.momentum)?;
        }
        let updates: Vec<Vec<(u32, Embedding)>> = sampled
            .iter()
            .map(|ids| {
                ids.iter()
                    .map(|&id| {
                        let q = self.query_params.get(id as usize).ok_or(PretrainError::UnknownObject(id))?;
                        Ok((id, q.clone()))
                    })
                    .collect::<Result<_, PretrainError>>()
            })
            .collect::<Result<_, _>>()?;
        for (w, ids) in self.workers.iter_mut().zip(sampled) {
            w.sampled = ids.clone();
        }
        gather_and_update(&mut self.workers, &updates)
    }

    fn replicas_identical(&self) -> bool {
        let first = self.workers[0].bank.fingerprint();
        self.workers.iter().all(|w| w.bank.fingerprint() == first)
    }
}

fn region_embedding(truth: &[f64], noise: f64, normalize: bool, key: (u64, usize, usize, usize)) -> Embedding {
    let (seed, step, worker, region) = key;
    let mut rng = scene_rng(derive_seed(derive_seed(seed, step as u64), worker as u64), region as u64);
    let sigma = noise / (truth.len() as f64).sqrt();
    let v: Vec<f64> = truth
        .iter()
        .map(|g| {
            let e: f64 = StandardNormal.sample(&mut rng);
            g + sigma * e
        })
        .collect();
    if normalize {
        l2_normalized(&v)
    } else {
        v
    }
}

/// Runs the loop over `scenes` (visible object ids per scene). Worker `w`
/// takes the scenes following a fixed round-robin order. Each step: losses
/// against the current replicas, query-encoder momentum step, per-worker
/// query sampling, gather.
pub fn simulate_pretrain(scenes: &[Vec<u32>], config: &PretrainConfig) -> Result<PretrainTrace, PretrainError> {
    if scenes.is_empty() {
        return Err(PretrainError::InvalidConfig("no scenes".into()));
    }
    if let Some(&id) = scenes.iter().flatten().find(|&&id| id as usize >= config.objects) {
        return Err(PretrainError::UnknownObject(id));
    }
    let mut proto = Protocol::new(config, config.workers)?;
    let universe: BTreeSet<u32> = (0..config.objects as u32).collect();
    let noise_seed = derive_seed(config.seed, NOISE_LABEL);
    let (w_count, t_count) = (config.workers, config.targets_per_worker);
    let mut rows = Vec::with_capacity(config.steps);

    for step in 0..config.steps {
        let mut loss_sum = 0.0;
        let mut regions = 0usize;
        let mut sampled = Vec::with_capacity(w_count);
        for w in 0..w_count {
            let targets: Vec<&Vec<u32>> = (0..t_count)
                .map(|j| &scenes[(step * w_count * t_count + w * t_count + j) % scenes.len()])
                .collect();
            let objects: Vec<u32> = targets.iter().flat_map(|s| s.iter().copied()).collect();
            if !objects.is_empty() {
                let embeddings = objects
                    .iter()
                    .enumerate()
                    .map(|(r, &c)| {
                        region_embedding(
                            &proto.truth[c as usize],
                            config.noise,
                            config.normalize,
                            (noise_seed, step, w, r),
                        )
                    })
                    .collect();
                let batch = RegionBatch::new(embeddings, objects.clone())?;
                let (loss, _) = contrastive_loss(&batch, &proto.workers[w].bank)?;
                loss_sum += loss;
                regions += batch.len();
            }
            let visible: BTreeSet<u32> = objects.into_iter().collect();
            let worker = &mut proto.workers[w];
            sampled.push(sample_queries(&visible, &universe, config.queries_per_worker, &mut worker.rng)?);
        }
        proto.advance(&sampled)?;
        debug_assert!(proto.replicas_identical());
        rows.push(TraceRow {
            step,
            mean_loss: (regions > 0).then(|| loss_sum / regions as f64),
        });
    }
    Ok(PretrainTrace {
        rows,
        final_bank: proto.workers[0].bank.clone(),
    })
}

/// Bank protocol alone, driven by an explicit schedule: `schedule[t][w]` is
/// the id list worker `w` writes at step `t`. Returns the final bank, or an
/// error if replicas ever disagree.
pub fn simulate_bank_schedule(config: &PretrainConfig, schedule: &[Vec<Vec<u32>>]) -> Result<MemoryBank, PretrainError> {
    let workers = schedule.first().map_or(1, Vec::len).max(1);
    let mut proto = Protocol::new(config, workers)?;
    for step in schedule {
        if step.len() != workers {
            return Err(PretrainError::LengthMismatch {
                left: workers,
                right: step.len(),
            });
        }
        proto.advance(step)?;
        if !proto.replicas_identical() {
            return Err(PretrainError::InvalidConfig("replicas diverged".into()));
        }
    }
    Ok(proto.workers[0].bank.clone())
}
