use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;

use super::{Embedding, MemoryBank};
use crate::error::PretrainError;
use crate::scene::rng::{scene_rng, SceneRng};

/// Picks `n` distinct query objects. With at least `n` visible objects, a
/// uniform `n`-subset of them; otherwise every visible object plus a uniform
/// subset of the remaining universe.
pub fn sample_queries<R: Rng + ?Sized>(
    visible: &BTreeSet<u32>,
    universe: &BTreeSet<u32>,
    n: usize,
    rng: &mut R,
) -> Result<Vec<u32>, PretrainError> {
    if universe.len() < n {
        return Err(PretrainError::InvalidConfig(format!(
            "cannot draw {n} queries from {} objects",
            universe.len()
        )));
    }
    let pick = |pool: Vec<u32>, k: usize, rng: &mut R| -> Vec<u32> {
        sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect()
    };
    let vis: Vec<u32> = visible.iter().copied().collect();
    if vis.len() >= n {
        return Ok(pick(vis, n, rng));
    }
    let rest: Vec<u32> = universe.difference(visible).copied().collect();
    let need = n - vis.len();
    if rest.len() < need {
        return Err(PretrainError::InvalidConfig(format!(
            "visible objects outside the universe leave too few to draw {need} more"
        )));
    }
    let mut out = vis;
    out.extend(pick(rest, need, rng));
    Ok(out)
}

/// One simulated worker: its bank replica, the queries it sampled this step
/// and its own random stream.
#[derive(Debug, Clone)]
pub struct WorkerState {
    pub index: usize,
    pub bank: MemoryBank,
    pub sampled: Vec<u32>,
    pub rng: SceneRng,
}

impl WorkerState {
    pub fn new(index: usize, bank: MemoryBank, seed: u64) -> Self {
        WorkerState {
            index,
            bank,
            sampled: Vec::new(),
            rng: scene_rng(seed, index as u64),
        }
    }
}

/// Applies every worker's `(id, embedding)` updates to every replica in
/// ascending (worker, position) order, so a later writer to the same id wins
/// and all replicas end identical.
pub fn gather_and_update(workers: &mut [WorkerState], updates: &[Vec<(u32, Embedding)>]) -> Result<(), PretrainError> {
    if workers.len() != updates.len() {
        return Err(PretrainError::LengthMismatch {
            left: workers.len(),
            right: updates.len(),
        });
    }
    for list in updates {
        let ids: BTreeSet<u32> = list.iter().map(|(id, _)| *id).collect();
        if ids.len() != list.len() {
            return Err(PretrainError::InvalidConfig("duplicate ids within one worker's updates".into()));
        }
    }
    for w in workers.iter_mut() {
        for (id, e) in updates.iter().flatten() {
            w.bank.set(*id, e)?;
        }
    }
    Ok(())
}

/// Single bank receiving the same updates one at a time in the given order.
pub fn sequential_reference(bank: &MemoryBank, ordered: &[(u32, Embedding)]) -> Result<MemoryBank, PretrainError> {
    let mut b = bank.clone();
    for (id, e) in ordered {
        b.set(*id, e)?;
    }
    Ok(b)
}
