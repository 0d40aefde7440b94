//! Weak-coupling limit: with C_ns ≈ 1 each |n'p±⟩ amplitude obeys
//!
//! dC_{p+}/dτ = -iλC_{p+} + iηF(τ),  dC_{p-}/dτ = -iλC_{p-} - iηF*(τ),
//!
//! with F(τ) = (κτ - i)/((κτ)² + 1)^{3/2}. The final populations are
//!
//! P_{p±} = 4η²κ⁻⁴ [λ sgn(κ) K0(1/|κ|) ∓ K1(1/|κ|)]².

mod bessel;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::propagator::dop853::{Dop853, StepFailure, Tolerances};

pub use bessel::{bessel_k, k0, k0_k1, k1};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum WeakFieldError {
    #[error("{0}")]
    Domain(String),
    #[error("weak-coupling integration failed at tau = {tau}")]
    Integration { tau: f64 },
}

/// Which p sublevel a channel ends in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    #[serde(rename = "p+")]
    PPlus,
    #[serde(rename = "p-")]
    PMinus,
}

impl Target {
    fn sign(self) -> f64 {
        match self {
            Target::PPlus => -1.0,
            Target::PMinus => 1.0,
        }
    }
}

/// One |ns⟩ → |n'p±⟩ channel.
///
/// κ passed to the functions of this module is always measured on the
/// reference gap |Δ_ref|; `gap_ratio` = |Δ_{n'p}|/|Δ_ref| converts it to the
/// channel's own κ/gap_ratio. It is 1 for the reference channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakCouplingChannel {
    pub eta: f64,
    pub lambda: f64,
    pub target: Target,
    pub gap_ratio: f64,
}

impl WeakCouplingChannel {
    pub fn new(eta: f64, lambda: f64, target: Target) -> Result<Self, WeakFieldError> {
        Self::with_gap_ratio(eta, lambda, target, 1.0)
    }

    pub fn with_gap_ratio(eta: f64, lambda: f64, target: Target, gap_ratio: f64) -> Result<Self, WeakFieldError> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(WeakFieldError::Domain(format!("eta must be non-negative, got {eta}")));
        }
        if lambda != 1.0 && lambda != -1.0 {
            return Err(WeakFieldError::Domain(format!("lambda must be +1 or -1, got {lambda}")));
        }
        if !(gap_ratio > 0.0 && gap_ratio.is_finite()) {
            return Err(WeakFieldError::Domain(format!("gap ratio must be positive, got {gap_ratio}")));
        }
        Ok(Self { eta, lambda, target, gap_ratio })
    }

    fn own_kappa(&self, kappa: f64) -> f64 {
        kappa / self.gap_ratio
    }

    /// Sign of κ on which this channel is resonant.
    pub fn favoured_sign(&self) -> f64 {
        self.lambda * self.target.sign()
    }
}

/// F(τ) = (κτ - i) / ((κτ)² + 1)^{3/2}.
pub fn driving_function(kappa: f64, tau: f64) -> C64 {
    let s = kappa * tau;
    let r2 = s * s + 1.0;
    C64::new(s, -1.0) / (r2 * r2.sqrt())
}

/// Result of the closed-form probability. At κ = 0 the electron never
/// passes and the adiabatic limit 0 is returned with the flag set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnalyticProbability {
    pub probability: f64,
    pub adiabatic_limit: bool,
}

/// λ sgn(κ) K0(1/|κ|) ∓ K1(1/|κ|) on the channel's own κ.
fn bracket(channel: &WeakCouplingChannel, own_kappa: f64) -> f64 {
    let (a, b) = k0_k1(1.0 / own_kappa.abs());
    channel.lambda * own_kappa.signum() * a + channel.target.sign() * b
}

pub fn analytic_probability(channel: &WeakCouplingChannel, kappa: f64) -> AnalyticProbability {
    if kappa == 0.0 {
        return AnalyticProbability { probability: 0.0, adiabatic_limit: true };
    }
    let k = channel.own_kappa(kappa);
    let p = if k.abs() < 1e-3 {
        // P < e^{-2000}; avoids 0/0 once κ⁴ underflows
        0.0
    } else {
        let b = bracket(channel, k);
        4.0 * channel.eta * channel.eta * b * b / k.powi(4)
    };
    AnalyticProbability { probability: p, adiabatic_limit: false }
}

/// Location and height of a channel's maximum over κ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub kappa: f64,
    pub probability: f64,
    /// |∂P/∂κ| at `kappa`.
    pub slope: f64,
}

/// f(z) = z⁴ (K0(z) + K1(z))² with z = 1/|κ|, the η-free peak-branch shape.
fn branch_shape(z: f64) -> f64 {
    let (a, b) = k0_k1(z);
    (z * z * (a + b)).powi(2)
}

/// Sign-carrying factor of df/dz: (2 - z)(K0 + K1) - K1.
fn branch_stationarity(z: f64) -> f64 {
    let (a, b) = k0_k1(z);
    (2.0 - z) * (a + b) - b
}

/// Maximizes P over κ on the resonant sign branch: golden-section search on
/// log|κ|, then bisection on the stationarity condition.
pub fn find_peak(channel: &WeakCouplingChannel) -> Peak {
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let objective = |log_u: f64| branch_shape((-log_u).exp());
    let (mut lo, mut hi) = (0.05f64.ln(), 20f64.ln());
    let mut c = hi - golden * (hi - lo);
    let mut d = lo + golden * (hi - lo);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while hi - lo > 1e-5 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - golden * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + golden * (hi - lo);
            fd = objective(d);
        }
    }
    // polish: g(z) changes sign across the maximum (g > 0 below it in z)
    let u = (0.5 * (lo + hi)).exp();
    let (mut z_lo, mut z_hi) = (0.9 / u, 1.1 / u);
    debug_assert!(branch_stationarity(z_lo) > 0.0 && branch_stationarity(z_hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (z_lo + z_hi);
        if mid == z_lo || mid == z_hi {
            break;
        }
        if branch_stationarity(mid) > 0.0 {
            z_lo = mid;
        } else {
            z_hi = mid;
        }
    }
    let z = 0.5 * (z_lo + z_hi);
    let eta2 = channel.eta * channel.eta;
    let r = channel.gap_ratio;
    let (a, b) = k0_k1(z);
    // dP/du = 4η² f'(z) (-z²) with f'(z) = 2z³B((2 - z)B - K1), B = K0 + K1
    let df_dz = 2.0 * z.powi(3) * (a + b) * branch_stationarity(z);
    let slope = (4.0 * eta2 * df_dz * z * z / r).abs();
    Peak {
        kappa: channel.favoured_sign() * r / z,
        probability: 4.0 * eta2 * branch_shape(z),
        slope,
    }
}

/// Amplitudes of the weak-coupling equations sampled on a τ grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakTrajectory {
    pub tau: Vec<f64>,
    /// amplitudes[i][c] is channel c at tau[i].
    pub amplitudes: Vec<Vec<C64>>,
}

impl WeakTrajectory {
    /// |C|² of every channel at the last grid point.
    pub fn final_probabilities(&self) -> Vec<f64> {
        self.amplitudes.last().map(|a| a.iter().map(|c| c.norm_sqr()).collect()).unwrap_or_default()
    }
}

/// Integrates the first-order weak-coupling equations with all amplitudes
/// zero at `tau_grid[0]`. In reference units the channel with gap ratio r
/// obeys dC/dτ = r(-iλC ± iηF^(*)(τ)).
pub fn weak_ode_solution(
    channels: &[WeakCouplingChannel],
    kappa: f64,
    tau_grid: &[f64],
    tol: Tolerances,
) -> Result<WeakTrajectory, WeakFieldError> {
    if tau_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(WeakFieldError::Domain("tau grid must be strictly increasing".into()));
    }
    let n = channels.len();
    let mut c = vec![C64::new(0.0, 0.0); n];
    let mut out = WeakTrajectory { tau: tau_grid.to_vec(), amplitudes: Vec::with_capacity(tau_grid.len()) };
    if tau_grid.is_empty() {
        return Ok(out);
    }
    out.amplitudes.push(c.clone());
    if n == 0 {
        out.amplitudes.resize(tau_grid.len(), Vec::new());
        return Ok(out);
    }
    let i = C64::new(0.0, 1.0);
    let rhs = |tau: f64, y: &[C64], dy: &mut [C64]| {
        let f = driving_function(kappa, tau);
        for ((d, y), ch) in dy.iter_mut().zip(y).zip(channels) {
            let drive = match ch.target {
                Target::PPlus => i * ch.eta * f,
                Target::PMinus => -i * ch.eta * f.conj(),
            };
            *d = ch.gap_ratio * (-i * ch.lambda * y + drive);
        }
    };
    let mut solver = Dop853::new(tol, n);
    for w in tau_grid.windows(2) {
        solver.integrate(rhs, w[0], w[1], &mut c, |_, _| {}).map_err(|e| match e {
            StepFailure::Underflow { t } | StepFailure::NonFinite { t } => WeakFieldError::Integration { tau: t },
        })?;
        out.amplitudes.push(c.clone());
    }
    Ok(out)
}
