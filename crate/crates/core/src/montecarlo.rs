//! Block-seeded Monte Carlo plumbing and simplex samplers.
//!
//! A run of `n` samples is cut into fixed-size blocks. Block `b` draws from
//! its own ChaCha8 stream (`seed`, stream `b`), and per-block statistics are
//! merged strictly in block order. Results therefore depend only on the
//! seed and the sample count, not on how blocks are scheduled; the std
//! companion crate runs the same blocks on a thread pool.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::combinatorics::binomial;
use crate::error::Result;
use crate::math::sqrt;
use crate::tomography::PhotonDistribution;
use crate::Vector;

pub const DEFAULT_BLOCK_SIZE: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPlan {
    total: u64,
    block_size: u64,
}

impl BlockPlan {
    pub fn new(total: u64, block_size: u64) -> Self {
        assert!(block_size > 0, "block size must be positive");
        Self { total, block_size }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn block_size(&self) -> u64 {
        self.block_size
    }

    pub fn n_blocks(&self) -> u64 {
        self.total.div_ceil(self.block_size)
    }

    pub fn block_len(&self, block: u64) -> u64 {
        let start = block * self.block_size;
        self.block_size.min(self.total.saturating_sub(start))
    }
}

pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Welford accumulator with Chan's pairwise merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        Self {
            n,
            mean: self.mean + delta * nb / n as f64,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n as f64,
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            sqrt(self.variance() / self.n as f64)
        }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Statistics of one block plus the number of samples it discarded.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BlockOutcome {
    pub stats: RunningStats,
    pub rejected: u64,
}

impl BlockOutcome {
    pub fn merge(&self, other: &Self) -> Self {
        Self {
            stats: self.stats.merge(&other.stats),
            rejected: self.rejected + other.rejected,
        }
    }
}

/// Merges block outcomes in the order given.
pub fn reduce_in_order<I: IntoIterator<Item = BlockOutcome>>(blocks: I) -> BlockOutcome {
    blocks
        .into_iter()
        .fold(BlockOutcome::default(), |acc, b| acc.merge(&b))
}

/// Work that can be split into independently seeded blocks.
pub trait BlockTask: Sync {
    type Output: Send;

    fn plan(&self) -> BlockPlan;

    fn run_block(&self, block: u64) -> Self::Output;
}

/// Runs every block on the current thread, in order.
pub fn run_sequential<T: BlockTask>(task: &T) -> Vec<T::Output> {
    (0..task.plan().n_blocks()).map(|b| task.run_block(b)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SimplexSampler {
    /// Flat Dirichlet via normalized exponentials.
    #[default]
    Uniform,
    /// `|<n|ψ>|²` of a Haar-random pure state built from complex Gaussians.
    Haar,
}

impl SimplexSampler {
    pub fn sample<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> PhotonDistribution {
        match self {
            SimplexSampler::Uniform => sample_simplex_uniform(d, rng),
            SimplexSampler::Haar => sample_simplex_haar(d, rng),
        }
    }
}

/// A point drawn uniformly from the probability simplex.
pub fn sample_simplex_uniform<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PhotonDistribution {
    loop {
        let w = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(Exp1));
        if w.sum() > 0.0 {
            return PhotonDistribution::from_weights(w);
        }
    }
}

/// Photon-number populations of a Haar-random pure state.
pub fn sample_simplex_haar<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PhotonDistribution {
    loop {
        let w = Vector::from_fn(d, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            re * re + im * im
        });
        if w.sum() > 0.0 {
            return PhotonDistribution::from_weights(w);
        }
    }
}

/// `E[p_j^m] = 1 / C(m + d - 1, m)` under the uniform simplex measure.
pub fn simplex_moment(d: usize, m: u32) -> Result<BigRational> {
    let denom = binomial((m as usize + d - 1) as u64, m as i64)?;
    Ok(BigRational::new(BigInt::from(1), BigInt::from(denom)))
}
