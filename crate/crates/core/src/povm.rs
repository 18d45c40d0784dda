//! Amplitude matrices of multiport devices and their analytic inverses.
//!
//! A multiport device with `s` equal-efficiency ports and loss probability
//! `ε` is a POVM whose `j`-click outcome is the photon-number mixture
//! `Π_j = Σ_n β_{jn} |n><n|`. All information about the device sits in the
//! `d × d` amplitude matrix `B` with `B[j, n] = β_{jn}`: columns sum to one,
//! row 0 is `ε^n`, and `β_{jn} = 0` whenever `j > n`.
//!
//! Four regimes are distinguished by tag, never by numeric closeness:
//!
//! | ports    | loss  | regime                    | matrix          |
//! |----------|-------|---------------------------|-----------------|
//! | finite   | ε = 0 | [`Regime::FiniteLossless`] | `B_s`           |
//! | finite   | ε > 0 | [`Regime::FiniteLossy`]    | `B_s · B_ε`     |
//! | infinite | ε = 0 | [`Regime::Fock`]           | identity        |
//! | infinite | ε > 0 | [`Regime::Binomial`]       | `B_ε`           |

use alloc::format;
use alloc::vec::Vec;

use log::warn;

use crate::combinatorics::{binomial_f64, falling_ratio, StirlingTables};
use crate::error::{Error, Result};
use crate::math::{abs, ln, powi};
use crate::signed_log::SignedLogReal;
use crate::special::reg_inc_beta;
use crate::{Matrix, Vector};

/// Column sums must equal one to this tolerance.
pub const COLUMN_SUM_TOL: f64 = 1e-12;

/// Largest dimension for which analytic inverses are asserted accurate.
pub const INVERSE_ENVELOPE_D: usize = 15;

/// Scale-relative tolerance between analytic and LU inverses.
pub const INVERSE_CROSSCHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ports {
    Finite(u64),
    Infinite,
}

impl core::fmt::Display for Ports {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Ports::Finite(s) => write!(f, "{s}"),
            Ports::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    FiniteLossless,
    FiniteLossy,
    /// `s → ∞`, `ε = 0`: the Fock-state measurement.
    Fock,
    /// `s → ∞`, `ε > 0`: binomial mixtures of Fock outcomes.
    Binomial,
    /// User-supplied amplitude matrix with no device parameters attached.
    General,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::FiniteLossless => "finite-lossless",
            Regime::FiniteLossy => "finite-lossy",
            Regime::Fock => "fock",
            Regime::Binomial => "binomial",
            Regime::General => "general",
        }
    }
}

/// `(s, d, ε)` for a device with equal port efficiencies `η = (1 - ε)/s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceConfig {
    ports: Ports,
    d: usize,
    eps: f64,
}

impl DeviceConfig {
    pub fn new(ports: Ports, d: usize, eps: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Dimension(d, 2));
        }
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::LossOutOfRange(eps));
        }
        if ports == Ports::Finite(0) {
            return Err(Error::Domain("a device needs at least one output port".into()));
        }
        Ok(Self { ports, d, eps })
    }

    pub fn finite(s: u64, d: usize, eps: f64) -> Result<Self> {
        Self::new(Ports::Finite(s), d, eps)
    }

    pub fn infinite(d: usize, eps: f64) -> Result<Self> {
        Self::new(Ports::Infinite, d, eps)
    }

    pub fn ports(&self) -> Ports {
        self.ports
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Port efficiency `(1 - ε)/s`; `None` for infinitely many ports.
    pub fn eta(&self) -> Option<f64> {
        match self.ports {
            Ports::Finite(s) => Some((1.0 - self.eps) / s as f64),
            Ports::Infinite => None,
        }
    }

    pub fn regime(&self) -> Regime {
        match (self.ports, self.eps == 0.0) {
            (Ports::Finite(_), true) => Regime::FiniteLossless,
            (Ports::Finite(_), false) => Regime::FiniteLossy,
            (Ports::Infinite, true) => Regime::Fock,
            (Ports::Infinite, false) => Regime::Binomial,
        }
    }

    /// `s >= d - 1`, the port-count condition for informational completeness.
    /// Devices violating it can still be built, but not inverted.
    pub fn has_enough_ports(&self) -> bool {
        match self.ports {
            Ports::Finite(s) => s + 1 >= self.d as u64,
            Ports::Infinite => true,
        }
    }

    pub(crate) fn require_enough_ports(&self) -> Result<()> {
        match self.ports {
            Ports::Finite(s) if !self.has_enough_ports() => {
                Err(Error::NotInformationallyComplete { s, d: self.d })
            }
            _ => Ok(()),
        }
    }
}

/// The `d × d` matrix of POVM amplitudes `β_{jn}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeMatrix {
    entries: Matrix,
    config: Option<DeviceConfig>,
    regime: Regime,
}

impl AmplitudeMatrix {
    /// Builds the amplitude matrix of a device, dispatching on its regime.
    pub fn for_device(cfg: &DeviceConfig) -> Result<Self> {
        match cfg.regime() {
            Regime::FiniteLossless | Regime::FiniteLossy => amplitudes_finite(cfg),
            Regime::Fock => amplitudes_fock(cfg.d),
            Regime::Binomial => amplitudes_binomial(cfg.d, cfg.eps),
            Regime::General => unreachable!("device configs never carry the general tag"),
        }
    }

    /// Wraps a user-supplied amplitude matrix after checking it is square,
    /// has entries in `[0, 1]`, unit column sums and no `j > n` entries.
    pub fn from_matrix(entries: Matrix) -> Result<Self> {
        let d = entries.nrows();
        if entries.ncols() != d {
            return Err(Error::InvalidAmplitudes(format!(
                "matrix is {}x{}, expected square",
                d,
                entries.ncols()
            )));
        }
        if d == 0 {
            return Err(Error::Dimension(0, 1));
        }
        for n in 0..d {
            for j in 0..d {
                let b = entries[(j, n)];
                if !(-COLUMN_SUM_TOL..=1.0 + COLUMN_SUM_TOL).contains(&b) {
                    return Err(Error::InvalidAmplitudes(format!("entry ({j},{n}) = {b} outside [0,1]")));
                }
                if j > n && b != 0.0 {
                    return Err(Error::InvalidAmplitudes(format!(
                        "entry ({j},{n}) = {b}: a {j}-click event needs at least {j} photons"
                    )));
                }
            }
            let sum: f64 = entries.column(n).iter().sum();
            if abs(sum - 1.0) > COLUMN_SUM_TOL {
                return Err(Error::InvalidAmplitudes(format!("column {n} sums to {sum}")));
            }
        }
        Ok(Self {
            entries,
            config: None,
            regime: Regime::General,
        })
    }

    fn tagged(entries: Matrix, config: Option<DeviceConfig>, regime: Regime) -> Self {
        Self {
            entries,
            config,
            regime,
        }
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn into_entries(self) -> Matrix {
        self.entries
    }

    pub fn d(&self) -> usize {
        self.entries.nrows()
    }

    pub fn config(&self) -> Option<&DeviceConfig> {
        self.config.as_ref()
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// `β_{jn}`.
    pub fn get(&self, j: usize, n: usize) -> f64 {
        self.entries[(j, n)]
    }

    /// Loss probability read back from `β_{01} = ε`.
    pub fn loss(&self) -> f64 {
        if self.d() < 2 {
            0.0
        } else {
            self.entries[(0, 1)]
        }
    }

    pub fn column_sums(&self) -> Vector {
        Vector::from_iterator(self.d(), self.entries.column_iter().map(|c| c.sum()))
    }

    /// `Tr Π_j = Σ_n β_{jn}`.
    pub fn traces(&self) -> Vector {
        outcome_traces(self)
    }

    pub fn povm(&self) -> Povm {
        Povm::from_amplitudes(self)
    }
}

/// Outcome operators as photon-number-diagonal vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    outcomes: Vec<Vector>,
    traces: Vector,
}

impl Povm {
    pub fn from_amplitudes(b: &AmplitudeMatrix) -> Self {
        let outcomes: Vec<Vector> = b.entries.row_iter().map(|r| r.transpose()).collect();
        let traces = Vector::from_iterator(outcomes.len(), outcomes.iter().map(|o| o.sum()));
        Self { outcomes, traces }
    }

    /// `|Π_j>`, the diagonal of outcome `j`.
    pub fn outcome(&self, j: usize) -> &Vector {
        &self.outcomes[j]
    }

    pub fn outcomes(&self) -> &[Vector] {
        &self.outcomes
    }

    pub fn traces(&self) -> &Vector {
        &self.traces
    }

    pub fn d(&self) -> usize {
        self.outcomes.len()
    }

    /// `Σ_j |Π_j>`, which should be the all-ones vector.
    pub fn completeness(&self) -> Vector {
        self.outcomes
            .iter()
            .fold(Vector::zeros(self.d()), |acc, o| acc + o)
    }

    /// Stack `V` whose rows are `<Π_j|` (identical to `B`).
    pub fn stack(&self) -> Matrix {
        let d = self.d();
        Matrix::from_fn(d, d, |j, n| self.outcomes[j][n])
    }
}

/// `B_s` for a lossless device: `β_{jn} = s!/((s-j)! s^n) · S2(n, j)`.
fn lossless_matrix(s: u64, d: usize) -> Result<Matrix> {
    let table = StirlingTables::new(d - 1)?;
    let sf = s as f64;
    let mut b = Matrix::zeros(d, d);
    for n in 0..d {
        for j in 0..=n.min(s.min(usize::MAX as u64) as usize) {
            b[(j, n)] = falling_ratio(s, j) * table.second_f64(n, j)? / powi(sf, (n - j) as i32);
        }
    }
    Ok(b)
}

fn binomial_matrix(d: usize, eps: f64) -> Matrix {
    let mut b = Matrix::zeros(d, d);
    for n in 0..d {
        for j in 0..=n {
            b[(j, n)] = binomial_f64(n, j) * powi(1.0 - eps, j as i32) * powi(eps, (n - j) as i32);
        }
    }
    b
}

/// Amplitudes of a finite-port device, computed as `B_s · B_ε`.
pub fn amplitudes_finite(cfg: &DeviceConfig) -> Result<AmplitudeMatrix> {
    let Ports::Finite(s) = cfg.ports else {
        return Err(Error::InfinitePorts);
    };
    let mut b = lossless_matrix(s, cfg.d)?;
    if cfg.eps > 0.0 {
        b = &b * binomial_matrix(cfg.d, cfg.eps);
    }
    Ok(AmplitudeMatrix::tagged(b, Some(*cfg), cfg.regime()))
}

/// The `s → ∞`, lossless device: the `d × d` identity.
pub fn amplitudes_fock(d: usize) -> Result<AmplitudeMatrix> {
    if d == 0 {
        return Err(Error::Dimension(0, 1));
    }
    let cfg = DeviceConfig::infinite(d, 0.0).ok();
    Ok(AmplitudeMatrix::tagged(Matrix::identity(d, d), cfg, Regime::Fock))
}

/// The `s → ∞` lossy device: `(B_ε)_{jn} = C(n, j) (1-ε)^j ε^{n-j}`.
pub fn amplitudes_binomial(d: usize, eps: f64) -> Result<AmplitudeMatrix> {
    if d == 0 {
        return Err(Error::Dimension(0, 1));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::LossOutOfRange(eps));
    }
    let cfg = DeviceConfig::infinite(d, eps).ok();
    let regime = if eps == 0.0 { Regime::Fock } else { Regime::Binomial };
    Ok(AmplitudeMatrix::tagged(binomial_matrix(d, eps), cfg, regime))
}

/// Direct evaluation of the alternating port sum, kept as an independent
/// check on [`amplitudes_finite`].
#[derive(Debug, Clone)]
pub struct DirectAmplitudes {
    pub entries: Matrix,
    /// Per-entry rounding bound, `64 u · Σ |terms|`; grows like `C(s, j) 2^j`.
    pub tolerance: Matrix,
}

/// `β_{jn} = (-1)^j C(s,j) Σ_k C(j,k) (-1)^k [1 - η(s-k)]^n`.
pub fn amplitudes_direct(cfg: &DeviceConfig) -> Result<DirectAmplitudes> {
    let Ports::Finite(s) = cfg.ports else {
        return Err(Error::InfinitePorts);
    };
    let d = cfg.d;
    let eta = (1.0 - cfg.eps) / s as f64;
    let mut entries = Matrix::zeros(d, d);
    let mut tolerance = Matrix::zeros(d, d);
    for j in 0..d.min(s as usize + 1) {
        let csj = binomial_f64(s as usize, j);
        for n in 0..d {
            let mut sum = 0.0;
            let mut mag = 0.0;
            for k in 0..=j {
                let base = 1.0 - eta * (s as f64 - k as f64);
                let term = binomial_f64(j, k) * powi(base, n as i32);
                mag += abs(term);
                if k % 2 == 0 {
                    sum += term;
                } else {
                    sum -= term;
                }
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            entries[(j, n)] = sign * csj * sum;
            tolerance[(j, n)] = 64.0 * f64::EPSILON * csj * mag;
        }
    }
    Ok(DirectAmplitudes { entries, tolerance })
}

/// `Tr Π_j`, the row sums of `B`.
pub fn outcome_traces(b: &AmplitudeMatrix) -> Vector {
    Vector::from_iterator(b.d(), b.entries.row_iter().map(|r| r.sum()))
}

/// Closed form of the `s → ∞` traces,
/// `Tr Π_j = [1 - I_ε(d - j, j + 1)] / (1 - ε)`.
pub fn binomial_traces(d: usize, eps: f64) -> Result<Vector> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::LossOutOfRange(eps));
    }
    let mut out = Vector::zeros(d);
    for j in 0..d {
        out[j] = (1.0 - reg_inc_beta(eps, (d - j) as f64, (j + 1) as f64)?) / (1.0 - eps);
    }
    Ok(out)
}

/// `(B_ε^{-1})_{jn} = C(n, j) (1-ε)^{-n} (-ε)^{n-j}`.
pub fn inverse_binomial(d: usize, eps: f64) -> Result<Matrix> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::LossOutOfRange(eps));
    }
    let mut inv = Matrix::zeros(d, d);
    for n in 0..d {
        for j in 0..=n {
            let sign = if (n - j) % 2 == 0 { 1.0 } else { -1.0 };
            inv[(j, n)] =
                sign * binomial_f64(n, j) * powi(eps, (n - j) as i32) / powi(1.0 - eps, n as i32);
        }
    }
    Ok(inv)
}

/// `(B_s^{-1})_{jn} = ((s-n)!/s!) s^j (-1)^{n-j} c(n, j)`.
pub fn inverse_lossless(s: u64, d: usize) -> Result<Matrix> {
    if s + 1 < d as u64 {
        return Err(Error::NotInformationallyComplete { s, d });
    }
    let table = StirlingTables::new(d.saturating_sub(1))?;
    let sf = s as f64;
    let mut inv = Matrix::zeros(d, d);
    for n in 0..d {
        let ratio = falling_ratio(s, n);
        for j in 0..=n {
            let sign = if (n - j) % 2 == 0 { 1.0 } else { -1.0 };
            inv[(j, n)] = sign * table.first_f64(n, j)? / (ratio * powi(sf, (n - j) as i32));
        }
    }
    Ok(inv)
}

/// `W_{jn} = (-1)^{n-j} ε^{-j} ((s-n)!/s!) Σ_{l=j}^{n} (εs/(1-ε))^l C(l,j) c(n,l)`
/// in signed-log form. This is `(B_s B_ε)^{-1} = B_ε^{-1} B_s^{-1}`; every
/// term of the inner sum is positive.
pub fn lossy_inverse_log(s: u64, d: usize, eps: f64) -> Result<Vec<Vec<SignedLogReal>>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::LossOutOfRange(eps));
    }
    if s + 1 < d as u64 {
        return Err(Error::NotInformationallyComplete { s, d });
    }
    let table = StirlingTables::new(d.saturating_sub(1))?;
    let ln_x = ln(eps) + ln(s as f64) - ln(1.0 - eps);
    let ln_eps = ln(eps);
    let mut w = alloc::vec![alloc::vec![SignedLogReal::ZERO; d]; d];
    for n in 0..d {
        // ln(s!/(s-n)!) = n ln s + ln Π(1 - i/s)
        let ln_falling = n as f64 * ln(s as f64) + ln(falling_ratio(s, n));
        for j in 0..=n {
            let inner: SignedLogReal = (j..=n)
                .map(|l| {
                    SignedLogReal::exp(l as f64 * ln_x + ln(binomial_f64(l, j)))
                        * table.first_log(n, l).unwrap_or(SignedLogReal::ZERO)
                })
                .sum();
            let sign = if (n - j) % 2 == 0 { 1 } else { -1 };
            let front = SignedLogReal::from_parts(sign, -(j as f64) * ln_eps - ln_falling);
            w[j][n] = front * inner;
        }
    }
    Ok(w)
}

/// An analytic inverse together with its numerical cross-check.
#[derive(Debug, Clone)]
pub struct AnalyticInverse {
    pub matrix: Matrix,
    /// `max |analytic - LU| / max(1, max |analytic|)`.
    pub crosscheck_deviation: f64,
    /// False outside `d <= 15` or when the cross-check exceeds tolerance.
    pub within_envelope: bool,
}

/// Analytic inverse of the amplitude matrix of any equal-efficiency device,
/// `B_{s,ε}^{-1} = B_ε^{-1} B_s^{-1}` for finite lossy devices.
///
/// The float product is more accurate than exponentiating [`lossy_inverse_log`]
/// entry by entry, whose log magnitudes reach ~40 at `d = 15`, `ε = 0.7`.
pub fn inverse_general(cfg: &DeviceConfig) -> Result<AnalyticInverse> {
    cfg.require_enough_ports()?;
    let d = cfg.d;
    let matrix = match (cfg.ports, cfg.regime()) {
        (_, Regime::Fock) => Matrix::identity(d, d),
        (_, Regime::Binomial) => inverse_binomial(d, cfg.eps)?,
        (Ports::Finite(s), Regime::FiniteLossless) => inverse_lossless(s, d)?,
        (Ports::Finite(s), _) => inverse_binomial(d, cfg.eps)? * inverse_lossless(s, d)?,
        (Ports::Infinite, _) => unreachable!(),
    };
    let numeric = AmplitudeMatrix::for_device(cfg)?
        .into_entries()
        .lu()
        .try_inverse()
        .ok_or(Error::SingularAmplitudes)?;
    let scale = matrix.amax().max(1.0);
    let crosscheck_deviation = (&matrix - &numeric).amax() / scale;
    let within_envelope = d <= INVERSE_ENVELOPE_D && crosscheck_deviation <= INVERSE_CROSSCHECK_TOL;
    if !within_envelope {
        warn!(
            "analytic inverse for s = {}, d = {}, eps = {} outside validity envelope (LU deviation {:e})",
            cfg.ports, d, cfg.eps, crosscheck_deviation
        );
    }
    Ok(AnalyticInverse {
        matrix,
        crosscheck_deviation,
        within_envelope,
    })
}

/// `max |M - I|`.
pub fn identity_residual(m: &Matrix) -> f64 {
    let d = m.nrows();
    (m - Matrix::identity(d, m.ncols())).amax()
}
