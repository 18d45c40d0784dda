//! How photon loss limits informational completeness.
//!
//! For an infinite-port device the weight of outcome `j` is
//! `1 - I_ε(d-j, j+1) = P[Bin(d, 1-ε) > j]`. An outcome is resolvable when
//! this weight exceeds a threshold `μ`, and the device is informationally
//! complete when every outcome is resolvable.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{atanh, powi};
use crate::povm::{amplitudes_finite, AmplitudeMatrix, DeviceConfig};
use crate::special::reg_inc_beta;
use crate::Vector;

pub const DEFAULT_MU: f64 = 1e-3;

/// Points in the monotonicity scan that precedes finite-`s` bisection.
pub const SCAN_POINTS: usize = 64;

const INFINITE_TOL: f64 = 1e-10;
const FINITE_TOL: f64 = 1e-8;

fn check_args(eps: f64, mu: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::LossOutOfRange(eps));
    }
    check_mu(mu)
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Domain(alloc::format!("threshold mu must lie in (0, 1), got {mu}")));
    }
    Ok(())
}

/// `1 - I_ε(d-j, j+1)`.
pub fn resolvability_weight(d: usize, j: usize, eps: f64) -> Result<f64> {
    Ok(1.0 - reg_inc_beta(eps, (d - j) as f64, (j + 1) as f64)?)
}

/// Largest `j < d` with `1 - I_ε(d-j, j+1) > μ`, or `None` if even `j = 0`
/// fails.
pub fn j_threshold(d: usize, eps: f64, mu: f64) -> Result<Option<usize>> {
    check_args(eps, mu)?;
    for j in (0..d).rev() {
        if resolvability_weight(d, j, eps)? > mu {
            return Ok(Some(j));
        }
    }
    Ok(None)
}

/// Resolvable dimension `j_thres + 1` (zero when nothing is resolvable).
pub fn d_res(d: usize, eps: f64, mu: f64) -> Result<usize> {
    Ok(j_threshold(d, eps, mu)?.map_or(0, |j| j + 1))
}

/// `d(1-ε) + atanh(1 - 2μ)`, from `I_ε(d-j, j+1) ≈ ½ + ½ tanh(j - d(1-ε))`.
pub fn d_res_bound(d: usize, eps: f64, mu: f64) -> Result<f64> {
    check_args(eps, mu)?;
    Ok(d as f64 * (1.0 - eps) + atanh(1.0 - 2.0 * mu))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvabilityReport {
    pub d: usize,
    pub eps: f64,
    pub mu_thres: f64,
    pub j_thres: Option<usize>,
    pub d_res_numeric: usize,
    pub d_res_analytic_bound: f64,
    pub is_ic: bool,
}

pub fn report(d: usize, eps: f64, mu: f64) -> Result<ResolvabilityReport> {
    let j_thres = j_threshold(d, eps, mu)?;
    let d_res_numeric = j_thres.map_or(0, |j| j + 1);
    Ok(ResolvabilityReport {
        d,
        eps,
        mu_thres: mu,
        j_thres,
        d_res_numeric,
        d_res_analytic_bound: d_res_bound(d, eps, mu)?,
        is_ic: d_res_numeric == d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalEps {
    /// Root of `1 - I_ε(1, d) = μ`.
    pub exact: f64,
    /// `atanh(1 - 2μ) / d`.
    pub approx: f64,
}

fn bisect<F: FnMut(f64) -> Result<bool>>(mut lo: f64, mut hi: f64, tol: f64, mut ok: F) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Largest loss keeping the `d-1` outcome resolvable for `s → ∞`.
pub fn critical_eps_infinite(d: usize, mu: f64) -> Result<CriticalEps> {
    if d < 2 {
        return Err(Error::Dimension(d, 2));
    }
    check_mu(mu)?;
    let exact = bisect(0.0, 1.0, INFINITE_TOL, |eps| {
        Ok(1.0 - reg_inc_beta(eps, 1.0, d as f64)? > mu)
    })?;
    Ok(CriticalEps {
        exact,
        approx: atanh(1.0 - 2.0 * mu) / d as f64,
    })
}

/// `Tr Π_{d-1}` of a finite device, read off the amplitude matrix.
pub fn last_outcome_trace(s: u64, d: usize, eps: f64) -> Result<f64> {
    let b = amplitudes_finite(&DeviceConfig::finite(s, d, eps)?)?;
    Ok(b.entries().row(d - 1).sum())
}

/// Largest `ε` with `Tr Π_{d-1} > μ` for `s` ports, or `None` when the
/// lossless device already fails.
///
/// The trace is scanned on a uniform grid first; a rise anywhere along the
/// grid is reported as [`Error::NonMonotone`] rather than bisected.
pub fn critical_eps_finite(s: u64, d: usize, mu: f64) -> Result<Option<f64>> {
    check_mu(mu)?;
    DeviceConfig::finite(s, d, 0.0)?.require_enough_ports()?;
    let f = |eps: f64| last_outcome_trace(s, d, eps);
    let grid: Vec<f64> = (0..SCAN_POINTS).map(|i| i as f64 / SCAN_POINTS as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&e| f(e)).collect::<Result<_>>()?;
    for (w, e) in values.windows(2).zip(grid.iter().skip(1)) {
        if w[1] > w[0] {
            return Err(Error::NonMonotone(*e));
        }
    }
    if values[0] <= mu {
        return Ok(None);
    }
    let lo = match values.iter().rposition(|&v| v > mu) {
        Some(i) => grid[i],
        None => return Ok(None),
    };
    let hi = grid.iter().copied().find(|&e| e > lo).unwrap_or(1.0);
    bisect(lo, hi, FINITE_TOL, |e| Ok(f(e)? > mu)).map(Some)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRow {
    pub eps: f64,
    pub d_res_numeric: usize,
    pub d_res_bound: f64,
}

impl PhaseRow {
    /// The bound capped at `d`, since no device resolves more than `d` levels.
    pub fn clamped_bound(&self, d: usize) -> f64 {
        self.d_res_bound.min(d as f64)
    }
}

pub fn phase_diagram(d: usize, mu: f64, eps_grid: &[f64]) -> Result<Vec<PhaseRow>> {
    eps_grid
        .iter()
        .map(|&eps| {
            Ok(PhaseRow {
                eps,
                d_res_numeric: d_res(d, eps, mu)?,
                d_res_bound: d_res_bound(d, eps, mu)?,
            })
        })
        .collect()
}

/// Index of the first row whose numeric `d_res` rises above its
/// predecessor, for grids sorted by increasing `ε`.
pub fn first_increase(rows: &[PhaseRow]) -> Option<usize> {
    rows.windows(2)
        .position(|w| w[1].eps >= w[0].eps && w[1].d_res_numeric > w[0].d_res_numeric)
        .map(|i| i + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcDiagnostics {
    pub is_ic: bool,
    /// `(1 - β_{01}) Tr Π_j` for every outcome.
    pub weights: Vector,
    pub gram_min_eigenvalue: f64,
    /// Outcomes whose weight is at or below `μ`.
    pub failing_outcomes: Vec<usize>,
    pub gram_ok: bool,
}

/// Combines outcome resolvability with Gram conditioning: every weight
/// `(1 - β_{01}) Tr Π_j` must exceed `μ` and `λ_min(B Bᵀ)` must exceed `μ²`.
pub fn is_informationally_complete(b: &AmplitudeMatrix, mu: f64) -> Result<IcDiagnostics> {
    check_mu(mu)?;
    let transmit = 1.0 - b.loss();
    let weights = b.traces() * transmit;
    let failing_outcomes: Vec<usize> = weights
        .iter()
        .enumerate()
        .filter(|&(_, &w)| !(w > mu))
        .map(|(j, _)| j)
        .collect();
    let gram = b.entries() * b.entries().transpose();
    let gram_min_eigenvalue = gram
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let gram_ok = gram_min_eigenvalue > mu * mu;
    Ok(IcDiagnostics {
        is_ic: gram_ok && failing_outcomes.is_empty(),
        weights,
        gram_min_eigenvalue,
        failing_outcomes,
        gram_ok,
    })
}

/// `Tr Π_{d-1}` of a finite device in closed form, `(s)_{d-1}/s^{d-1} (1-ε)^{d-1}`.
pub fn last_outcome_trace_closed(s: u64, d: usize, eps: f64) -> f64 {
    crate::combinatorics::falling_ratio(s, d - 1) * powi(1.0 - eps, d as i32 - 1)
}
