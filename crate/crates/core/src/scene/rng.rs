//! Scene random streams.
//!
//! Every scene draws from ChaCha8 seeded with `seed_from_u64(seed)` and
//! switched to stream `index` via `set_stream`. Streams are independent, so
//! scene `i` is reproducible on its own, in any order, on any thread.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as SceneRng;

pub fn scene_rng(seed: u64, stream: u64) -> SceneRng {
    let mut rng = SceneRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed from a parent seed and a label; used to give
/// subsystems (search candidates, simulated workers) their own streams.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    // splitmix64 finalizer over the combined word
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
