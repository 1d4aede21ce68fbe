//! Seeded inputs shared by the benchmarks.

use qsent_core::{FeatureMatrix, Labels};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// `rows × cols` angles drawn from `[0, 2π)`.
pub fn angles(rows: usize, cols: usize, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FeatureMatrix::from_fn(rows, cols, |_, _| rng.random_range(0.0..2.0 * PI))
}

/// Alternating 0/1 labels.
pub fn labels(rows: usize) -> Labels {
    (0..rows).map(|i| (i % 2) as u8).collect()
}

pub fn signal(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}
