//! Tomographic transfer function: the Cramér–Rao bound `tr F(ρ)^{-1}`
//! averaged uniformly over the probability simplex.
//!
//! For a minimal informationally complete device,
//!
//! ```text
//! TTF = (1/d) [ Σ_j Tr Π_j (B Bᵀ)^{-1}_{jj} - 1/Tr Π_{d-1} - 2(d-1)/(d+1) ]
//! ```
//!
//! [`ttf_master`] evaluates this with a numerical inverse of `B`; the
//! regime-specific functions use the analytic inverses instead.

use num_rational::Ratio;

use crate::combinatorics::{falling_ratio, hyp2f1_terminating, stirling_hyp1_log, StirlingTables};
use crate::error::{Error, Result};
use crate::math::{ln, powi};
use crate::montecarlo::{
    block_rng, reduce_in_order, run_sequential, BlockOutcome, BlockPlan, BlockTask, SimplexSampler,
    DEFAULT_BLOCK_SIZE,
};
use crate::povm::{
    amplitudes_finite, binomial_traces, lossy_inverse_log, AmplitudeMatrix, DeviceConfig, Ports,
    Regime,
};
use crate::signed_log::SignedLogReal;
use crate::tomography::{crb_with, measurement_matrix, probabilities, P_FLOOR};
use crate::{Matrix, Vector};

/// Monte Carlo runs fail when more than this fraction of samples hit the
/// probability floor.
pub const MAX_REJECTION_RATE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ClosedForm,
    MasterFormula,
    MonteCarlo,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::MasterFormula => "master-formula",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McMeta {
    pub samples: u64,
    pub seed: u64,
    pub standard_error: f64,
    pub rejected: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtfResult {
    pub value: f64,
    pub regime: Regime,
    pub method: Method,
    /// Present exactly when `method` is [`Method::MonteCarlo`].
    pub mc: Option<McMeta>,
}

impl TtfResult {
    fn exact(value: f64, regime: Regime, method: Method) -> Self {
        Self {
            value,
            regime,
            method,
            mc: None,
        }
    }

    pub fn standard_error(&self) -> Option<f64> {
        self.mc.map(|m| m.standard_error)
    }
}

fn simplex_constant(d: usize) -> f64 {
    2.0 * (d as f64 - 1.0) / (d as f64 + 1.0)
}

fn require_ic(b: &AmplitudeMatrix) -> Result<()> {
    let d = b.d();
    if (0..d).all(|j| b.get(j, j) > 0.0) {
        return Ok(());
    }
    match b.config().map(|c| c.ports()) {
        Some(Ports::Finite(s)) => Err(Error::NotInformationallyComplete { s, d }),
        _ => Err(Error::SingularAmplitudes),
    }
}

/// Master formula with a pivoted-LU inverse of `B`.
pub fn ttf_master(b: &AmplitudeMatrix) -> Result<TtfResult> {
    require_ic(b)?;
    let inv = b
        .entries()
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::SingularAmplitudes)?;
    let traces = b.traces();
    let value = master_from_inverse(&inv, &traces);
    if !value.is_finite() {
        return Err(Error::SingularAmplitudes);
    }
    Ok(TtfResult::exact(value, b.regime(), Method::MasterFormula))
}

/// `(B Bᵀ)^{-1}_{jj} = Σ_n (B^{-1})_{nj}²`.
fn master_from_inverse(inv: &Matrix, traces: &Vector) -> f64 {
    let d = traces.len();
    let diag_sum: f64 = (0..d)
        .map(|j| traces[j] * inv.column(j).norm_squared())
        .sum();
    (diag_sum - 1.0 / traces[d - 1] - simplex_constant(d)) / d as f64
}

/// `(d-1)² / (d(d+1))`.
pub fn ttf_fock(d: usize) -> f64 {
    let d = d as f64;
    (d - 1.0) * (d - 1.0) / (d * (d + 1.0))
}

pub fn ttf_fock_exact(d: u64) -> Ratio<u64> {
    Ratio::new((d - 1) * (d - 1), d * (d + 1))
}

/// `s → ∞` with loss: `(B_ε Bᵀ_ε)^{-1}_{jj} = (1-ε)^{-2j} ₂F₁(-j,-j;1;ε²)`.
pub fn ttf_infinite_lossy(d: usize, eps: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::Dimension(d, 2));
    }
    if eps == 0.0 {
        return Ok(ttf_fock(d));
    }
    let traces = binomial_traces(d, eps)?;
    let y = eps * eps;
    let mut sum = 0.0;
    for j in 0..d {
        sum += traces[j] * hyp2f1_terminating(j, j, y) / powi(1.0 - eps, 2 * j as i32);
    }
    let last = 1.0 / powi(1.0 - eps, d as i32 - 1);
    Ok((sum - last - simplex_constant(d)) / d as f64)
}

fn require_ports(s: u64, d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Dimension(d, 2));
    }
    if s + 1 < d as u64 {
        return Err(Error::NotInformationallyComplete { s, d });
    }
    Ok(())
}

/// Finite `s`, no loss, from Stirling numbers of both kinds.
pub fn ttf_finite_lossless(s: u64, d: usize) -> Result<f64> {
    require_ports(s, d)?;
    let table = StirlingTables::new(d - 1)?;
    let ln_s = ln(s as f64);
    let mut sum = 0.0;
    for j in 0..d {
        // (s-j)!/s! = 1 / (s^j Π(1 - i/s))
        let ln_inv_falling = -(j as f64 * ln_s + ln(falling_ratio(s, j)));
        let hyp = stirling_hyp1_log(j, j, (s as f64) * (s as f64))?;
        let tail: SignedLogReal = (j..d)
            .map(|n| table.second_log(n, j).map(|v| v * SignedLogReal::exp(-(n as f64) * ln_s)))
            .sum::<Result<SignedLogReal>>()?;
        sum += (SignedLogReal::exp(ln_inv_falling) * hyp * tail).to_f64();
    }
    // s^{d-1} (s-d+1)!/s! = 1/Tr Π_{d-1}
    let last = 1.0 / falling_ratio(s, d - 1);
    Ok((sum - last - simplex_constant(d)) / d as f64)
}

/// Finite `s` with loss, from the analytic inverse `W = B_ε^{-1} B_s^{-1}`.
pub fn ttf_finite_lossy(s: u64, d: usize, eps: f64) -> Result<f64> {
    require_ports(s, d)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::LossOutOfRange(eps));
    }
    if eps == 0.0 {
        return ttf_finite_lossless(s, d);
    }
    let w = lossy_inverse_log(s, d, eps)?;
    let traces = amplitudes_finite(&DeviceConfig::finite(s, d, eps)?)?.traces();
    let mut sum = 0.0;
    for j in 0..d {
        // (Wᵀ W)_{jj} = Σ_n W_{nj}²
        let col: SignedLogReal = (0..d).map(|n| w[n][j].powi(2)).sum();
        sum += traces[j] * col.to_f64();
    }
    let last = 1.0 / (falling_ratio(s, d - 1) * powi(1.0 - eps, d as i32 - 1));
    Ok((sum - last - simplex_constant(d)) / d as f64)
}

/// Closed form for the device's regime.
pub fn ttf_closed_form(cfg: &DeviceConfig) -> Result<TtfResult> {
    let d = cfg.d();
    let value = match cfg.ports() {
        Ports::Infinite => ttf_infinite_lossy(d, cfg.eps())?,
        Ports::Finite(s) => ttf_finite_lossy(s, d, cfg.eps())?,
    };
    Ok(TtfResult::exact(value, cfg.regime(), Method::ClosedForm))
}

/// Monte Carlo average of `tr F(ρ)^{-1}` over simplex samples, as a
/// [`BlockTask`] so callers may schedule blocks however they like.
#[derive(Debug, Clone)]
pub struct TtfMonteCarlo {
    amplitudes: AmplitudeMatrix,
    meas: Matrix,
    plan: BlockPlan,
    seed: u64,
    sampler: SimplexSampler,
}

impl TtfMonteCarlo {
    pub fn new(b: &AmplitudeMatrix, n_samples: u64, seed: u64) -> Result<Self> {
        require_ic(b)?;
        if n_samples < 2 {
            return Err(Error::Domain(alloc::format!(
                "Monte Carlo needs at least 2 samples, got {n_samples}"
            )));
        }
        Ok(Self {
            amplitudes: b.clone(),
            meas: measurement_matrix(b),
            plan: BlockPlan::new(n_samples, DEFAULT_BLOCK_SIZE),
            seed,
            sampler: SimplexSampler::Uniform,
        })
    }

    pub fn with_sampler(mut self, sampler: SimplexSampler) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn with_block_size(mut self, block_size: u64) -> Self {
        self.plan = BlockPlan::new(self.plan.total(), block_size);
        self
    }

    /// Merges block outcomes (in block order) into a result.
    pub fn finish<I: IntoIterator<Item = BlockOutcome>>(&self, blocks: I) -> Result<TtfResult> {
        let total = reduce_in_order(blocks);
        let samples = self.plan.total();
        if total.rejected as f64 > MAX_REJECTION_RATE * samples as f64 {
            return Err(Error::RejectionRate {
                rejected: total.rejected,
                total: samples,
            });
        }
        Ok(TtfResult {
            value: total.stats.mean(),
            regime: self.amplitudes.regime(),
            method: Method::MonteCarlo,
            mc: Some(McMeta {
                samples,
                seed: self.seed,
                standard_error: total.stats.std_error(),
                rejected: total.rejected,
            }),
        })
    }
}

impl BlockTask for TtfMonteCarlo {
    type Output = BlockOutcome;

    fn plan(&self) -> BlockPlan {
        self.plan
    }

    fn run_block(&self, block: u64) -> BlockOutcome {
        let mut rng = block_rng(self.seed, block);
        let d = self.amplitudes.d();
        let mut out = BlockOutcome::default();
        for _ in 0..self.plan.block_len(block) {
            let rho = self.sampler.sample(d, &mut rng);
            let p = probabilities(&self.amplitudes, &rho);
            if p.iter().any(|&x| x <= P_FLOOR) {
                out.rejected += 1;
                continue;
            }
            match crb_with(&self.meas, &p) {
                Ok(v) => out.stats.push(v),
                Err(_) => out.rejected += 1,
            }
        }
        out
    }
}

/// Sequential Monte Carlo TTF with uniform simplex sampling.
pub fn ttf_monte_carlo(b: &AmplitudeMatrix, n_samples: u64, seed: u64) -> Result<TtfResult> {
    let task = TtfMonteCarlo::new(b, n_samples, seed)?;
    task.finish(run_sequential(&task))
}
