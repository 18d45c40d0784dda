//! Measurement matrix, frame operator, canonical duals, Fisher information
//! and the Cramér–Rao bound for photon-number-distribution tomography.
//!
//! Operators diagonal in the photon-number basis are handled as their
//! diagonals ("operator kets"), so the POVM of a device is just the rows of
//! its amplitude matrix `B` and the Born rule reads `p = B ρ`.
//!
//! The `d` probabilities `ρ_n` sum to one, so only `d - 1` of them are free.
//! By default the dependent coordinate is `ρ_{d-1}`; the `_dropping`
//! variants take the dropped index explicitly.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, sqrt};
use crate::povm::{AmplitudeMatrix, Povm};
use crate::{Matrix, Vector};

/// Probabilities at or below this are boundary points for Fisher/CRB.
pub const P_FLOOR: f64 = 1e-12;

/// Frame operators with a smaller eigenvalue are flagged as singular.
pub const FRAME_SINGULAR_TOL: f64 = 1e-12;

const SUM_TOL: f64 = 1e-12;

/// A photon-number distribution `ρ_n`, `n = 0, …, d-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    probs: Vector,
}

impl PhotonDistribution {
    pub fn new(probs: Vector) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty distribution".into()));
        }
        for (n, &p) in probs.iter().enumerate() {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::InvalidDistribution(format!("rho[{n}] = {p}")));
            }
        }
        let sum = probs.sum();
        if abs(sum - 1.0) > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn from_slice(probs: &[f64]) -> Result<Self> {
        Self::new(Vector::from_column_slice(probs))
    }

    pub fn uniform(d: usize) -> Self {
        Self {
            probs: Vector::from_element(d, 1.0 / d as f64),
        }
    }

    /// The Fock state `|n><n|`.
    pub fn fock(d: usize, n: usize) -> Self {
        let mut probs = Vector::zeros(d);
        probs[n] = 1.0;
        Self { probs }
    }

    /// Normalizes nonnegative weights. Used by the simplex samplers.
    pub(crate) fn from_weights(mut w: Vector) -> Self {
        let total = w.sum();
        w /= total;
        Self { probs: w }
    }

    pub fn probs(&self) -> &Vector {
        &self.probs
    }

    pub fn d(&self) -> usize {
        self.probs.len()
    }

    /// `ρ_0, …, ρ_{d-2}`.
    pub fn support(&self) -> Vector {
        self.probs.rows(0, self.d() - 1).into_owned()
    }

    /// Index and value of the first entry at or below `floor`, if any.
    pub fn boundary_entry(&self, floor: f64) -> Option<(usize, f64)> {
        self.probs.iter().copied().enumerate().find(|&(_, p)| p <= floor)
    }

    pub fn is_interior(&self, floor: f64) -> bool {
        self.boundary_entry(floor).is_none()
    }
}

/// Frame operator together with its smallest eigenvalue.
#[derive(Debug, Clone)]
pub struct Frame {
    pub matrix: Matrix,
    pub min_eigenvalue: f64,
}

impl Frame {
    pub fn is_singular(&self) -> bool {
        self.min_eigenvalue < FRAME_SINGULAR_TOL
    }
}

/// `C[j, n] = β_{jn} - β_{j,d-1}`, shape `d × (d-1)`.
pub fn measurement_matrix(b: &AmplitudeMatrix) -> Matrix {
    measurement_matrix_dropping(b, b.d() - 1)
}

/// Measurement matrix with `ρ_k` as the dependent coordinate.
pub fn measurement_matrix_dropping(b: &AmplitudeMatrix, k: usize) -> Matrix {
    let d = b.d();
    let kept: Vec<usize> = (0..d).filter(|&n| n != k).collect();
    Matrix::from_fn(d, d - 1, |j, c| b.get(j, kept[c]) - b.get(j, k))
}

fn min_symmetric_eigenvalue(m: &Matrix) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `F = Σ_j |Π_j><Π_j| / Tr Π_j`, skipping outcomes with zero trace.
pub fn frame_operator(povm: &Povm) -> Frame {
    let d = povm.d();
    let mut matrix = Matrix::zeros(d, d);
    for (o, &t) in povm.outcomes().iter().zip(povm.traces().iter()) {
        if t > 0.0 {
            matrix += o * o.transpose() / t;
        }
    }
    let min_eigenvalue = min_symmetric_eigenvalue(&matrix);
    Frame {
        matrix,
        min_eigenvalue,
    }
}

/// `G = V Vᵀ` with `V` the stack of `<Π_j|` rows.
pub fn gram(povm: &Povm) -> Matrix {
    let v = povm.stack();
    &v * v.transpose()
}

/// `A = D^{-1/2} V` over outcomes with nonzero trace, so that `F = AᵀA`.
/// Working with the QR factors of `A` avoids squaring its condition number.
struct WeightedQr {
    r_inv: Matrix,
}

fn weighted_qr(povm: &Povm, frame: &Frame) -> Result<WeightedQr> {
    if frame.is_singular() {
        return Err(Error::SingularFrame(frame.min_eigenvalue));
    }
    let d = povm.d();
    let rows: Vec<usize> = (0..d).filter(|&j| povm.traces()[j] > 0.0).collect();
    let scale: Vec<f64> = rows.iter().map(|&j| 1.0 / sqrt(povm.traces()[j])).collect();
    let a = Matrix::from_fn(rows.len(), d, |i, n| povm.outcome(rows[i])[n] * scale[i]);
    let qr = a.qr();
    let r_inv = qr
        .r()
        .solve_upper_triangular(&Matrix::identity(d, d))
        .ok_or(Error::SingularFrame(frame.min_eigenvalue))?;
    Ok(WeightedQr { r_inv })
}

/// `F^{-1} = R^{-1} R^{-T}`.
fn frame_inverse(povm: &Povm, frame: &Frame) -> Result<Matrix> {
    let f = weighted_qr(povm, frame)?;
    Ok(&f.r_inv * f.r_inv.transpose())
}

/// Rows are `<Θ_j| = <Π_j| F^{-1} / Tr Π_j`.
pub fn canonical_duals(povm: &Povm) -> Result<Matrix> {
    let frame = frame_operator(povm);
    duals_from_frame(povm, &frame)
}

// For a minimal POVM `V` is square and `F^{-1} Vᵀ D^{-1} = V^{-1}`, so the
// duals are the columns of `V^{-1}`.
fn duals_from_frame(povm: &Povm, frame: &Frame) -> Result<Matrix> {
    if frame.is_singular() {
        return Err(Error::SingularFrame(frame.min_eigenvalue));
    }
    let inv = povm
        .stack()
        .lu()
        .try_inverse()
        .ok_or(Error::SingularFrame(frame.min_eigenvalue))?;
    Ok(inv.transpose())
}

/// Born rule `p = B ρ`.
pub fn probabilities(b: &AmplitudeMatrix, rho: &PhotonDistribution) -> Vector {
    b.entries() * rho.probs()
}

fn interior_probabilities(b: &AmplitudeMatrix, rho: &PhotonDistribution) -> Result<Vector> {
    if b.d() != rho.d() {
        return Err(Error::InvalidDistribution(format!(
            "distribution has {} entries, device has d = {}",
            rho.d(),
            b.d()
        )));
    }
    let p = probabilities(b, rho);
    if let Some((index, value)) = p.iter().copied().enumerate().find(|&(_, v)| v <= P_FLOOR) {
        return Err(Error::Boundary {
            index,
            value,
            floor: P_FLOOR,
        });
    }
    Ok(p)
}

/// Fisher matrix `Cᵀ P^{-1} C` in the `ρ_0, …, ρ_{d-2}` parametrization.
pub fn fisher(b: &AmplitudeMatrix, rho: &PhotonDistribution) -> Result<Matrix> {
    fisher_dropping(b, rho, b.d() - 1)
}

pub fn fisher_dropping(b: &AmplitudeMatrix, rho: &PhotonDistribution, k: usize) -> Result<Matrix> {
    let p = interior_probabilities(b, rho)?;
    Ok(fisher_with(&measurement_matrix_dropping(b, k), &p))
}

pub(crate) fn fisher_with(c: &Matrix, p: &Vector) -> Matrix {
    let mut scaled = c.clone();
    for (mut row, &pj) in scaled.row_iter_mut().zip(p.iter()) {
        row /= pj;
    }
    c.transpose() * scaled
}

/// `tr F(ρ)^{-1}`, the Cramér–Rao bound on `N · MSE` over the support.
pub fn crb(b: &AmplitudeMatrix, rho: &PhotonDistribution) -> Result<f64> {
    crb_dropping(b, rho, b.d() - 1)
}

pub fn crb_dropping(b: &AmplitudeMatrix, rho: &PhotonDistribution, k: usize) -> Result<f64> {
    let p = interior_probabilities(b, rho)?;
    crb_with(&measurement_matrix_dropping(b, k), &p)
}

pub(crate) fn crb_with(c: &Matrix, p: &Vector) -> Result<f64> {
    // F = MᵀM with M = P^{-1/2} C, so tr F^{-1} = |R^{-1}|²
    let mut m = c.clone();
    for (mut row, &pj) in m.row_iter_mut().zip(p.iter()) {
        row /= sqrt(pj);
    }
    let k = m.ncols();
    let r_inv = m
        .qr()
        .r()
        .solve_upper_triangular(&Matrix::identity(k, k))
        .ok_or(Error::SingularFisher)?;
    let tr = r_inv.norm_squared();
    if tr.is_finite() {
        Ok(tr)
    } else {
        Err(Error::SingularFisher)
    }
}

/// `Σ_j p_j <Θ_j|Θ_j>|_sup - <ρ|ρ>|_sup`, with duals as rows of `duals`.
pub fn crb_dual(duals: &Matrix, b: &AmplitudeMatrix, rho: &PhotonDistribution) -> Result<f64> {
    crb_dual_dropping(duals, b, rho, b.d() - 1)
}

pub fn crb_dual_dropping(
    duals: &Matrix,
    b: &AmplitudeMatrix,
    rho: &PhotonDistribution,
    k: usize,
) -> Result<f64> {
    let p = interior_probabilities(b, rho)?;
    let d = b.d();
    let sup_norm = |v: &[f64]| -> f64 {
        v.iter()
            .enumerate()
            .filter(|&(n, _)| n != k)
            .map(|(_, x)| x * x)
            .sum()
    };
    let mut total = 0.0;
    for j in 0..d {
        let row: Vec<f64> = duals.row(j).iter().copied().collect();
        total += p[j] * sup_norm(&row);
    }
    Ok(total - sup_norm(rho.probs().as_slice()))
}

/// `|ρ̂> = Σ_j |Θ_j> ν_j`, unclipped.
pub fn linear_estimator(duals: &Matrix, freqs: &Vector) -> Vector {
    duals.transpose() * freqs
}

/// Linear estimate with negative entries clipped to zero and renormalized.
/// Falls back to the uniform distribution if nothing survives clipping.
pub fn clipped_estimate(estimate: &Vector) -> PhotonDistribution {
    let clipped = estimate.map(|x| x.max(0.0));
    if clipped.sum() > 0.0 {
        PhotonDistribution::from_weights(clipped)
    } else {
        PhotonDistribution::uniform(estimate.len())
    }
}

/// Everything derived from one device's POVM.
#[derive(Debug, Clone)]
pub struct TomographyKit {
    amplitudes: AmplitudeMatrix,
    frame: Frame,
    gram: Matrix,
    duals: Matrix,
    meas_matrix: Matrix,
    traces: Vector,
}

impl TomographyKit {
    pub fn new(b: &AmplitudeMatrix) -> Result<Self> {
        let povm = b.povm();
        let frame = frame_operator(&povm);
        let duals = duals_from_frame(&povm, &frame)?;
        Ok(Self {
            amplitudes: b.clone(),
            gram: gram(&povm),
            meas_matrix: measurement_matrix(b),
            traces: povm.traces().clone(),
            frame,
            duals,
        })
    }

    pub fn amplitudes(&self) -> &AmplitudeMatrix {
        &self.amplitudes
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    /// Rows are `<Θ_j|`.
    pub fn duals(&self) -> &Matrix {
        &self.duals
    }

    pub fn meas_matrix(&self) -> &Matrix {
        &self.meas_matrix
    }

    pub fn traces(&self) -> &Vector {
        &self.traces
    }

    pub fn d(&self) -> usize {
        self.traces.len()
    }

    pub fn probabilities(&self, rho: &PhotonDistribution) -> Vector {
        probabilities(&self.amplitudes, rho)
    }

    pub fn crb(&self, rho: &PhotonDistribution) -> Result<f64> {
        let p = interior_probabilities(&self.amplitudes, rho)?;
        crb_with(&self.meas_matrix, &p)
    }

    pub fn crb_dual(&self, rho: &PhotonDistribution) -> Result<f64> {
        crb_dual(&self.duals, &self.amplitudes, rho)
    }

    pub fn estimate(&self, freqs: &Vector) -> Vector {
        linear_estimator(&self.duals, freqs)
    }

    /// `max_{j,k} |<Π_j|Θ_k> - δ_{jk}|`.
    pub fn biorthogonality_residual(&self) -> f64 {
        let v = self.amplitudes.entries();
        let prod = v * self.duals.transpose();
        (prod - Matrix::identity(self.d(), self.d())).amax()
    }

    /// `<Π_j|F^{-1}|Π_k>`; equals `diag(Tr Π_j)` for minimal POVMs.
    pub fn frame_sandwich(&self) -> Result<Matrix> {
        let finv = frame_inverse(&self.amplitudes.povm(), &self.frame)?;
        let v = self.amplitudes.entries();
        Ok(v * finv * v.transpose())
    }

    /// `tr F^{-1}` over the retained coordinates `0, …, d-2`.
    pub fn frame_inverse_trace_support(&self) -> Result<f64> {
        let finv = frame_inverse(&self.amplitudes.povm(), &self.frame)?;
        let d = self.d();
        Ok(finv.trace() - finv[(d - 1, d - 1)])
    }

    pub fn frame_inverse(&self) -> Result<Matrix> {
        frame_inverse(&self.amplitudes.povm(), &self.frame)
    }

    pub fn frame_inverse_trace(&self) -> Result<f64> {
        Ok(frame_inverse(&self.amplitudes.povm(), &self.frame)?.trace())
    }
}
