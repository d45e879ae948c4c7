//! Seeded Gaussian streams.
//!
//! Every stream is a ChaCha8 generator; standard normals come from the
//! ziggurat sampler of `rand_distr::StandardNormal`. Correlated draws are
//! `L z` with `L` the (semidefinite) Cholesky factor of the covariance.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::linalg::{cholesky_psd, JitterPolicy};

/// What a stream is used for; each purpose gets an independent seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Initial = 1,
    Process = 2,
    Measurement = 3,
    Defender = 4,
    Scenario = 5,
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `run` derived from the master seed.
pub fn run_seed(master: u64, run: u64) -> u64 {
    splitmix64(master ^ splitmix64(run))
}

/// Seed of one purpose-specific stream within a run (or of a defender channel
/// `channel` when several forward filters are simulated).
pub fn stream_seed(run_seed: u64, purpose: StreamPurpose, channel: u64) -> u64 {
    splitmix64(run_seed ^ splitmix64((purpose as u64) << 32 | channel))
}

#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn standard(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| StandardNormal.sample(&mut self.rng))
    }

    /// Draw from `N(0, LLᵀ)`.
    pub fn with_factor(&mut self, factor: &DMatrix<f64>) -> DVector<f64> {
        factor * self.standard(factor.ncols())
    }

    /// Draw from `N(mean, cov)`.
    pub fn sample(&mut self, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<DVector<f64>> {
        let factor = cholesky_psd(cov, &JitterPolicy::default())?;
        Ok(mean + self.with_factor(&factor.l))
    }
}

/// Covariance square root used for repeated draws.
pub fn noise_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(cholesky_psd(cov, &JitterPolicy::default())?.l)
}
