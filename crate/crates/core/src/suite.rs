//! Seeded random test fields: sums of complex-weighted Gaussians.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{GridSpec, StateField};

/// Seed used by the inequality and coercivity suites.
pub const SUITE_SEED: u64 = 0x1d_5eed;

pub const GAUSSIANS_PER_SAMPLE: usize = 5;

/// Parameters of one Gaussian bump `a exp(-((x-c)/w)^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub amplitude: (f64, f64),
    pub center: f64,
    pub width: f64,
}

/// Draw the bumps of sample `seed`: centers in `[-L/4, L/4]`, widths in
/// `[0.5, 2]`, real and imaginary amplitudes in `[-1, 1]`. Independent of `N`.
pub fn bumps(half_length: f64, seed: u64) -> Vec<Bump> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..GAUSSIANS_PER_SAMPLE)
        .map(|_| Bump {
            amplitude: (rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)),
            center: rng.random_range(-0.25 * half_length..=0.25 * half_length),
            width: rng.random_range(0.5..=2.0),
        })
        .collect()
}

pub fn gaussian_sample(grid: &GridSpec, seed: u64) -> StateField {
    let bumps = bumps(grid.half_length, seed);
    StateField::from_fn(*grid, |x| {
        bumps
            .iter()
            .map(|b| Complex64::new(b.amplitude.0, b.amplitude.1) * (-((x - b.center) / b.width).powi(2)).exp())
            .sum()
    })
}

/// Samples `seed, seed + 1, ..., seed + count - 1`.
pub fn gaussian_suite(grid: &GridSpec, seed: u64, count: usize) -> Vec<StateField> {
    (0..count as u64).map(|i| gaussian_sample(grid, seed + i)).collect()
}
