//! Finite-shot simulation of the linear estimator.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::math::abs;
use crate::montecarlo::{block_rng, run_sequential, BlockPlan, BlockTask, RunningStats};
use crate::povm::AmplitudeMatrix;
use crate::tomography::{crb, PhotonDistribution, TomographyKit, P_FLOOR};
use crate::Vector;

pub const DEFAULT_TRIALS: u64 = 1000;

/// Trials per seeded block.
pub const TRIAL_BLOCK_SIZE: u64 = 64;

/// Multinomial counts by sequential conditional binomials.
pub fn sample_counts<R: Rng + ?Sized>(p: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = alloc::vec![0u64; p.len()];
    let mut left = n;
    let mut mass = 1.0;
    for (j, &pj) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if j + 1 == p.len() {
            counts[j] = left;
            break;
        }
        let q = if mass > 0.0 { (pj / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if q >= 1.0 {
            left
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(left, q).map(|b| b.sample(rng)).unwrap_or(0)
        };
        counts[j] = k;
        left -= k;
        mass -= pj;
    }
    counts
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    kit: TomographyKit,
    rho: PhotonDistribution,
    shots: u64,
    trials: u64,
    seed: u64,
}

impl ExperimentSpec {
    pub fn new(
        b: &AmplitudeMatrix,
        rho: PhotonDistribution,
        shots: u64,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        if shots == 0 || trials == 0 {
            return Err(Error::Domain(alloc::format!(
                "shots and trials must be positive, got N = {shots}, trials = {trials}"
            )));
        }
        if rho.d() != b.d() {
            return Err(Error::InvalidDistribution(alloc::format!(
                "distribution has {} entries, device has d = {}",
                rho.d(),
                b.d()
            )));
        }
        if let Some((index, value)) = rho.boundary_entry(P_FLOOR) {
            return Err(Error::Boundary {
                index,
                value,
                floor: P_FLOOR,
            });
        }
        Ok(Self {
            kit: TomographyKit::new(b)?,
            rho,
            shots,
            trials,
            seed,
        })
    }

    pub fn with_shots(&self, shots: u64) -> Self {
        Self {
            shots,
            ..self.clone()
        }
    }

    pub fn kit(&self) -> &TomographyKit {
        &self.kit
    }

    pub fn rho(&self) -> &PhotonDistribution {
        &self.rho
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Count vectors of every trial in one block, in trial order.
    pub fn block_counts(&self, block: u64) -> Vec<Vec<u64>> {
        let plan = BlockPlan::new(self.trials, TRIAL_BLOCK_SIZE);
        let p = self.kit.probabilities(&self.rho);
        let mut rng = block_rng(self.seed, block);
        (0..plan.block_len(block))
            .map(|_| sample_counts(p.as_slice(), self.shots, &mut rng))
            .collect()
    }

    /// `N |ρ̂ - ρ|²` over the support `0, …, d-2`.
    pub fn scaled_error(&self, counts: &[u64]) -> f64 {
        let n = self.shots as f64;
        let freqs = Vector::from_iterator(counts.len(), counts.iter().map(|&c| c as f64 / n));
        let est = self.kit.estimate(&freqs);
        let d = est.len();
        let sq: f64 = (0..d - 1).map(|i| { let e = est[i] - self.rho.probs()[i]; e * e }).sum();
        n * sq
    }
}

impl BlockTask for ExperimentSpec {
    type Output = RunningStats;

    fn plan(&self) -> BlockPlan {
        BlockPlan::new(self.trials, TRIAL_BLOCK_SIZE)
    }

    fn run_block(&self, block: u64) -> RunningStats {
        self.block_counts(block)
            .iter()
            .map(|c| self.scaled_error(c))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseEstimate {
    /// Mean of `N |ρ̂ - ρ|²_sup` over trials.
    pub n_mse: f64,
    pub std_error: f64,
    pub trials: u64,
}

pub fn finish_mse<I: IntoIterator<Item = RunningStats>>(blocks: I) -> MseEstimate {
    let stats = blocks
        .into_iter()
        .fold(RunningStats::default(), |a, b| a.merge(&b));
    MseEstimate {
        n_mse: stats.mean(),
        std_error: stats.std_error(),
        trials: stats.count(),
    }
}

/// Sequential `N · MSE` of the raw linear estimator.
pub fn empirical_mse(spec: &ExperimentSpec) -> MseEstimate {
    finish_mse(run_sequential(spec))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationRow {
    pub shots: u64,
    pub n_mse: f64,
    pub std_error: f64,
    pub crb: f64,
    pub ratio: f64,
}

impl SaturationRow {
    pub fn new(shots: u64, mse: MseEstimate, crb: f64) -> Self {
        Self {
            shots,
            n_mse: mse.n_mse,
            std_error: mse.std_error,
            crb,
            ratio: mse.n_mse / crb,
        }
    }

    /// `|ratio - 1|` in units of the ratio's standard error.
    pub fn sigma_gap(&self) -> f64 {
        abs(self.ratio - 1.0) / (self.std_error / self.crb)
    }
}

/// `N · MSE` against the bound for each shot count, sharing one seed.
pub fn crb_saturation_report(base: &ExperimentSpec, shots: &[u64]) -> Result<Vec<SaturationRow>> {
    let bound = crb(base.kit.amplitudes(), &base.rho)?;
    Ok(shots
        .iter()
        .map(|&n| SaturationRow::new(n, empirical_mse(&base.with_shots(n)), bound))
        .collect())
}
