//! Numeric core of instance-detection pretraining: contrastive loss against
//! a memory bank of per-object embeddings, momentum updates, and a
//! deterministic simulation of the multi-worker bank protocol.

mod protocol;
mod sim;

pub use protocol::{gather_and_update, sample_queries, sequential_reference, WorkerState};
pub use sim::{
    ground_truth_embeddings, simulate_bank_schedule, simulate_pretrain, BankInit, PretrainConfig, PretrainTrace,
    TraceRow,
};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::PretrainError;

pub type Embedding = Vec<f64>;

pub const DEFAULT_EMBEDDING_DIM: usize = 256;
pub const DEFAULT_TEMPERATURE: f64 = 0.2;
pub const DEFAULT_MOMENTUM: f64 = 0.999;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_normalized(v: &[f64]) -> Embedding {
    let n = dot(v, v).sqrt();
    if n == 0.0 {
        return v.to_vec();
    }
    v.iter().map(|x| x / n).collect()
}

/// Unit vector drawn uniformly from the sphere.
pub fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Embedding {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if dot(&v, &v) > 0.0 {
            return l2_normalized(&v);
        }
    }
}

/// One embedding per object id `0..N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryBank {
    pub dim: usize,
    pub temperature: f64,
    pub momentum: f64,
    pub normalize: bool,
    entries: Vec<Embedding>,
}

impl MemoryBank {
    pub fn new(entries: Vec<Embedding>, temperature: f64, momentum: f64, normalize: bool) -> Result<Self, PretrainError> {
        if !(temperature > 0.0) {
            return Err(PretrainError::InvalidConfig(format!("temperature {temperature} must be positive")));
        }
        if !(0.0..=1.0).contains(&momentum) {
            return Err(PretrainError::InvalidConfig(format!("momentum {momentum} must lie in [0, 1]")));
        }
        let dim = entries.first().map_or(0, Vec::len);
        if let Some(e) = entries.iter().find(|e| e.len() != dim) {
            return Err(PretrainError::LengthMismatch { left: dim, right: e.len() });
        }
        let entries = if normalize {
            entries.iter().map(|e| l2_normalized(e)).collect()
        } else {
            entries
        };
        Ok(MemoryBank {
            dim,
            temperature,
            momentum,
            normalize,
            entries,
        })
    }

    /// Bank of `n` random unit embeddings.
    pub fn random<R: Rng + ?Sized>(n: usize, dim: usize, temperature: f64, momentum: f64, rng: &mut R) -> Result<Self, PretrainError> {
        let entries = (0..n).map(|_| random_unit(dim, rng)).collect();
        MemoryBank::new(entries, temperature, momentum, true)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Embedding] {
        &self.entries
    }

    pub fn get(&self, id: u32) -> Result<&Embedding, PretrainError> {
        self.entries.get(id as usize).ok_or(PretrainError::UnknownObject(id))
    }

    /// Overwrites the entry for `id`, normalizing first if enabled.
    pub fn set(&mut self, id: u32, e: &[f64]) -> Result<(), PretrainError> {
        let dim = self.dim;
        let slot = self.entries.get_mut(id as usize).ok_or(PretrainError::UnknownObject(id))?;
        if e.len() != dim {
            return Err(PretrainError::LengthMismatch { left: dim, right: e.len() });
        }
        *slot = if self.normalize { l2_normalized(e) } else { e.to_vec() };
        Ok(())
    }

    /// Bit patterns of every entry, for exact replica comparison.
    pub fn fingerprint(&self) -> Vec<u64> {
        self.entries.iter().flatten().map(|x| x.to_bits()).collect()
    }
}

/// Region embeddings with the object each region belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionBatch {
    pub embeddings: Vec<Embedding>,
    pub objects: Vec<u32>,
}

impl RegionBatch {
    pub fn new(embeddings: Vec<Embedding>, objects: Vec<u32>) -> Result<Self, PretrainError> {
        if embeddings.len() != objects.len() {
            return Err(PretrainError::LengthMismatch {
                left: embeddings.len(),
                right: objects.len(),
            });
        }
        Ok(RegionBatch { embeddings, objects })
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }
}

/// Summed softmax cross-entropy of each region against every bank entry,
/// with similarities `k·q / τ`, and its gradient with respect to each
/// region embedding: `(1/τ) Σ_j (p_ij - [j = c_i]) q_j`.
pub fn contrastive_loss(batch: &RegionBatch, bank: &MemoryBank) -> Result<(f64, Vec<Embedding>), PretrainError> {
    if batch.is_empty() {
        return Err(PretrainError::InvalidConfig("empty region batch".into()));
    }
    if bank.is_empty() {
        return Err(PretrainError::InvalidConfig("empty memory bank".into()));
    }
    let tau = bank.temperature;
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(batch.len());
    let mut logits = vec![0.0; bank.len()];
    for (k, &c) in batch.embeddings.iter().zip(&batch.objects) {
        bank.get(c)?;
        if k.len() != bank.dim {
            return Err(PretrainError::LengthMismatch { left: bank.dim, right: k.len() });
        }
        for (l, q) in logits.iter_mut().zip(bank.entries()) {
            *l = dot(k, q) / tau;
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        let log_z = max + sum.ln();
        total += log_z - logits[c as usize];

        let mut g = vec![0.0; bank.dim];
        for (j, (l, q)) in logits.iter().zip(bank.entries()).enumerate() {
            let p = (l - log_z).exp();
            let coeff = (p - if j == c as usize { 1.0 } else { 0.0 }) / tau;
            for (gi, qi) in g.iter_mut().zip(q) {
                *gi += coeff * qi;
            }
        }
        grads.push(g);
    }
    Ok((total, grads))
}

/// Detector objective: contrastive plus the opaque box-regression and
/// proposal losses.
pub fn total_loss(con: f64, reg: f64, rpn: f64) -> f64 {
    con + reg + rpn
}

/// `m · query + (1 - m) · key`, elementwise.
pub fn momentum_update(query: &[f64], key: &[f64], m: f64) -> Result<Vec<f64>, PretrainError> {
    if query.len() != key.len() {
        return Err(PretrainError::LengthMismatch {
            left: query.len(),
            right: key.len(),
        });
    }
    if !(0.0..=1.0).contains(&m) {
        return Err(PretrainError::InvalidConfig(format!("momentum {m} must lie in [0, 1]")));
    }
    Ok(query.iter().zip(key).map(|(q, k)| m * q + (1.0 - m) * k).collect())
}
