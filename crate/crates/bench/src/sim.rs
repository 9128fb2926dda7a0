//! Seeded key generation and binary symmetric channel simulation.

use std::fmt;
use std::str::FromStr;

use mmrecon::BitBlock;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::BenchError;

/// How channel errors are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorModel {
    /// Every bit flips independently with probability `e`.
    Bernoulli,
    /// Exactly `round(e n)` distinct positions flip.
    ExactCount,
}

impl fmt::Display for ErrorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorModel::Bernoulli => "bernoulli",
            ErrorModel::ExactCount => "exact_count",
        })
    }
}

impl FromStr for ErrorModel {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "bernoulli" => Ok(ErrorModel::Bernoulli),
            "exact_count" | "exact-count" => Ok(ErrorModel::ExactCount),
            other => Err(BenchError::Args(format!("unknown error model {other:?}"))),
        }
    }
}

/// Mixes a master seed with a path of indices into an independent child
/// seed (splitmix64 finalizer applied after each component).
pub fn child_seed(master: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

/// Uniform key of `n` bits from a ChaCha8 stream seeded with `seed`.
pub fn gen_key(n: usize, seed: u64) -> BitBlock {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BitBlock::from_bools((0..n).map(|_| rng.random::<bool>()))
}

/// Passes `x` through a binary symmetric channel; returns Bob's bits and the
/// realized error fraction.
///
/// Panics unless `0 <= e <= 1`.
pub fn apply_bsc(x: &BitBlock, e: f64, model: ErrorModel, seed: u64) -> (BitBlock, f64) {
    assert!((0.0..=1.0).contains(&e), "error rate {e} outside [0, 1]");
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = x.clone();
    match model {
        ErrorModel::Bernoulli => {
            for i in 0..n {
                if rng.random_bool(e) {
                    y.flip(i);
                }
            }
        }
        ErrorModel::ExactCount => {
            let count = ((e * n as f64).round() as usize).min(n);
            for i in sample(&mut rng, n, count) {
                y.flip(i);
            }
        }
    }
    let realized = if n == 0 {
        0.0
    } else {
        x.hamming_distance(&y).expect("same length") as f64 / n as f64
    };
    (y, realized)
}

/// `round(rate n)` distinct positions in increasing order.
pub fn sample_positions(n: usize, rate: f64, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = ((rate * n as f64).round() as usize).min(n);
    let mut picks = sample(&mut rng, n, count).into_vec();
    picks.sort_unstable();
    picks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_deterministic() {
        assert_eq!(gen_key(100, 5), gen_key(100, 5));
        assert!(gen_key(64, 1).hamming_distance(&gen_key(64, 2)).unwrap() > 0);
    }

    #[test]
    fn channel_edge_rates() {
        let x = gen_key(300, 3);
        for model in [ErrorModel::Bernoulli, ErrorModel::ExactCount] {
            let (y, r) = apply_bsc(&x, 0.0, model, 9);
            assert_eq!((y, r), (x.clone(), 0.0));
            let (y, r) = apply_bsc(&x, 1.0, model, 9);
            assert_eq!((y, r), (x.complement(), 1.0));
        }
    }

    #[test]
    fn child_seeds_differ_by_path() {
        let a = child_seed(1, &[0, 0]);
        assert_ne!(a, child_seed(1, &[0, 1]));
        assert_ne!(a, child_seed(1, &[1, 0]));
        assert_ne!(a, child_seed(2, &[0, 0]));
        assert_eq!(a, child_seed(1, &[0, 0]));
    }
}
