//! Fixtures shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smeary_core::{PointCloud, SmearyFamily};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A sample of size `n` from the family at `α_crit + beta`.
pub fn cloud(m: usize, beta: f64, n: usize, seed: u64) -> PointCloud {
    let fam = SmearyFamily::from_beta(m, beta).expect("valid family");
    PointCloud::sample(&fam, n, &mut rng(seed))
}
