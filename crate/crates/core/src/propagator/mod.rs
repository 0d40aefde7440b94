//! Time-dependent Schrödinger propagation of the atom during a fly-by.
//!
//! Time is measured as τ = t|Δ| with Δ the gap between the initial |ns⟩ and
//! the same-n p level, and the electron sits at X = kt, so X/D = κτ. In these
//! units the amplitudes obey
//!
//! i dC/dτ = (ε + G(τ)) C,  G(τ) = (κτ x + y) / (D²|Δ| ((κτ)² + 1)^{3/2}),
//!
//! with ε_α = (E_α - E_ns)/|Δ|. Energies are measured from the initial level,
//! so its bare amplitude carries no free phase.

pub mod dop853;
mod observables;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::atomic::{BasisSet, DipoleTable, SparseOperator};
use crate::coupling::FlybyGeometry;
use dop853::{Dop853, StepFailure, StepStats, Tolerances};

pub use observables::{
    polarization, populations, write_trajectory_csv, Polarization, PopulationSummary, TrajectoryPoint,
};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("step size underflow at tau = {tau}")]
    StepUnderflow { tau: f64 },
    #[error("non-finite amplitudes at tau = {tau}")]
    NonFinite { tau: f64 },
    #[error("norm drift {drift:e} at tau = {tau} exceeds 100 x tolerance {tolerance:e}")]
    IntegratorRejection { tau: f64, drift: f64, tolerance: f64 },
    #[error("initial state is not normalized: |C|^2 = {0}")]
    NotNormalized(f64),
    #[error("state has {got} amplitudes, basis has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("basis has no p level with n = {0} to fix the time scale")]
    MissingReference(u32),
    #[error("invalid propagation setting: {0}")]
    Config(String),
}

impl From<StepFailure> for PropagationError {
    fn from(f: StepFailure) -> Self {
        match f {
            StepFailure::Underflow { t } => Self::StepUnderflow { tau: t },
            StepFailure::NonFinite { t } => Self::NonFinite { tau: t },
        }
    }
}

/// Amplitudes C_α over a basis at dimensionless time τ.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeVector {
    pub amplitudes: Vec<C64>,
    pub time: f64,
}

impl AmplitudeVector {
    /// Unit amplitude on basis index `index`.
    pub fn basis_state(dim: usize, index: usize, time: f64) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes, time }
    }

    /// The basis's initial |ns⟩ state.
    pub fn initial(basis: &BasisSet, time: f64) -> Self {
        Self::basis_state(basis.len(), basis.initial_index(), time)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Bare,
    InteractionPicture,
}

/// Integration settings. With `half_window = None` the window is
/// τ ∈ [-T, T] with |κ|T = `kappa_window`; if `auto_window` is set, T is
/// doubled until the final populations move by less than `window_tol`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationConfig {
    pub half_window: Option<f64>,
    pub kappa_window: f64,
    pub auto_window: bool,
    pub window_tol: f64,
    pub max_doublings: u32,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub frame: Frame,
    pub norm_tol: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            half_window: None,
            kappa_window: 50.0,
            auto_window: true,
            window_tol: 1e-5,
            max_doublings: 4,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            frame: Frame::InteractionPicture,
            norm_tol: 1e-8,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<(), PropagationError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(PropagationError::Config(format!("{name} must be positive, got {v}")))
            }
        };
        if let Some(t) = self.half_window {
            positive("half_window", t)?;
        }
        positive("kappa_window", self.kappa_window)?;
        positive("window_tol", self.window_tol)?;
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol", self.abs_tol)?;
        positive("norm_tol", self.norm_tol)
    }

    fn start_window(&self, kappa: f64) -> f64 {
        self.half_window.unwrap_or(self.kappa_window / kappa.abs())
    }
}

/// The atom in dimensionless form: detunings ε, position operators and
/// the coupling scale 1/(D²|Δ|).
#[derive(Clone, Debug)]
pub struct FlybySystem {
    detuning: Vec<f64>,
    x: SparseOperator,
    y: SparseOperator,
    strength: f64,
    gap: f64,
    distance: f64,
}

/// Δ = E_{np} - E_{ns} for the basis's initial n.
pub fn reference_gap(basis: &BasisSet) -> Result<f64, PropagationError> {
    let n = basis.initial.n;
    let e0 = basis.energies()[basis.initial_index()];
    basis
        .states()
        .iter()
        .zip(basis.energies())
        .find(|(s, _)| s.n == n && s.l == 1)
        .map(|(_, e)| e - e0)
        .ok_or(PropagationError::MissingReference(n))
}

impl FlybySystem {
    /// System with an explicit gap scale (Hartree).
    pub fn new(basis: &BasisSet, table: &DipoleTable, distance: f64, gap: f64) -> Result<Self, PropagationError> {
        if table.dim() != basis.len() {
            return Err(PropagationError::Dimension { expected: basis.len(), got: table.dim() });
        }
        if !(distance > 0.0) || gap == 0.0 {
            return Err(PropagationError::Config(format!("need D > 0 and a nonzero gap, got {distance}, {gap}")));
        }
        let scale = gap.abs();
        let e0 = basis.energies()[basis.initial_index()];
        Ok(Self {
            detuning: basis.energies().iter().map(|e| (e - e0) / scale).collect(),
            x: table.x_operator(),
            y: table.y_operator(),
            strength: 1.0 / (distance * distance * scale),
            gap: scale,
            distance,
        })
    }

    /// System whose time scale is the basis's own s-p gap.
    pub fn for_basis(basis: &BasisSet, table: &DipoleTable, distance: f64) -> Result<Self, PropagationError> {
        Self::new(basis, table, distance, reference_gap(basis)?)
    }

    pub fn dim(&self) -> usize {
        self.detuning.len()
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn detuning(&self) -> &[f64] {
        &self.detuning
    }

    /// κ for electron momentum `momentum` (atomic units).
    pub fn kappa(&self, momentum: f64) -> f64 {
        momentum / (self.distance * self.gap)
    }

    /// Weights (a, b) with G(τ) = a x + b y.
    fn weights(&self, kappa: f64, tau: f64) -> (f64, f64) {
        let s = kappa * tau;
        let r2 = s * s + 1.0;
        let b = self.strength / (r2 * r2.sqrt());
        (s * b, b)
    }

    /// out = G(τ) v, using `tmp` as scratch.
    fn apply_coupling(&self, kappa: f64, tau: f64, v: &[C64], out: &mut [C64], tmp: &mut [C64]) {
        let (a, b) = self.weights(kappa, tau);
        self.x.apply(v, out);
        self.y.apply(v, tmp);
        for (o, t) in out.iter_mut().zip(tmp.iter()) {
            *o = *o * a + *t * b;
        }
    }

    /// Bare amplitudes from interaction-picture ones at time τ.
    fn to_bare(&self, tau: f64, c: &[C64]) -> Vec<C64> {
        c.iter().zip(&self.detuning).map(|(c, e)| c * C64::from_polar(1.0, -e * tau)).collect()
    }

    fn to_interaction(&self, tau: f64, c: &[C64]) -> Vec<C64> {
        c.iter().zip(&self.detuning).map(|(c, e)| c * C64::from_polar(1.0, e * tau)).collect()
    }
}

/// Outcome of one propagation.
#[derive(Clone, Debug)]
pub struct Propagation {
    /// Bare-frame amplitudes at τ = +T.
    pub final_state: AmplitudeVector,
    pub half_window: f64,
    pub doublings: u32,
    /// Largest population change seen in the last window doubling (0 when
    /// the window was not doubled).
    pub window_change: f64,
    pub window_converged: bool,
    /// max |1 - |C|²| along the final trajectory.
    pub norm_drift: f64,
    pub stats: StepStats,
}

/// Propagates `initial` (given at τ = -T) across the window [-T, T].
///
/// `initial.time` is ignored; the state is placed at the start of each
/// window tried.
pub fn propagate(
    initial: &AmplitudeVector,
    system: &FlybySystem,
    kappa: f64,
    config: &PropagationConfig,
) -> Result<Propagation, PropagationError> {
    config.validate()?;
    if !(kappa != 0.0 && kappa.is_finite()) {
        return Err(PropagationError::Config(format!("kappa must be nonzero and finite, got {kappa}")));
    }
    let mut t = config.start_window(kappa);
    let mut current = propagate_between(initial, system, kappa, -t, t, config, |_, _| {})?;
    let mut doublings = 0;
    let mut change = 0.0;
    let mut converged = !config.auto_window;
    while config.auto_window && doublings < config.max_doublings {
        t *= 2.0;
        let next = propagate_between(initial, system, kappa, -t, t, config, |_, _| {})?;
        doublings += 1;
        change = max_population_change(&current.final_state, &next.final_state);
        current = next;
        if change < config.window_tol {
            converged = true;
            break;
        }
    }
    current.doublings = doublings;
    current.window_change = change;
    current.window_converged = converged;
    Ok(current)
}

/// Convenience form taking the physical geometry; κ follows from the
/// momentum and the basis's s-p gap.
pub fn propagate_geometry(
    initial: &AmplitudeVector,
    basis: &BasisSet,
    table: &DipoleTable,
    geometry: &FlybyGeometry,
    config: &PropagationConfig,
) -> Result<Propagation, PropagationError> {
    let system = FlybySystem::for_basis(basis, table, geometry.distance)?;
    propagate(initial, &system, system.kappa(geometry.momentum), config)
}

fn max_population_change(a: &AmplitudeVector, b: &AmplitudeVector) -> f64 {
    a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| (x.norm_sqr() - y.norm_sqr()).abs())
        .fold(0.0, f64::max)
}

/// Integrates the bare-frame state `initial` from `tau_start` to `tau_end`
/// (either direction) in the configured frame. `observe` receives every
/// accepted step as bare-frame amplitudes.
pub fn propagate_between<O>(
    initial: &AmplitudeVector,
    system: &FlybySystem,
    kappa: f64,
    tau_start: f64,
    tau_end: f64,
    config: &PropagationConfig,
    mut observe: O,
) -> Result<Propagation, PropagationError>
where
    O: FnMut(f64, &[C64]),
{
    let n = system.dim();
    if initial.amplitudes.len() != n {
        return Err(PropagationError::Dimension { expected: n, got: initial.amplitudes.len() });
    }
    let norm0 = initial.norm_sqr();
    if (norm0 - 1.0).abs() > 100.0 * config.norm_tol {
        return Err(PropagationError::NotNormalized(norm0));
    }
    let tol = Tolerances { rel: config.rel_tol, abs: config.abs_tol };
    let mut solver = Dop853::new(tol, n);
    let limit = 100.0 * config.norm_tol;
    let mut drift = 0.0f64;
    let mut violation: Option<(f64, f64)> = None;
    let mut track = |tau: f64, bare: &[C64]| {
        let d = (1.0 - bare.iter().map(|c| c.norm_sqr()).sum::<f64>()).abs();
        drift = drift.max(d);
        if d > limit && violation.is_none() {
            violation = Some((tau, d));
        }
        observe(tau, bare);
    };
    track(tau_start, &initial.amplitudes);

    let mut tmp = vec![C64::new(0.0, 0.0); n];
    let state = match config.frame {
        Frame::Bare => {
            let mut c = initial.amplitudes.clone();
            let rhs = |tau: f64, c: &[C64], dc: &mut [C64]| {
                system.apply_coupling(kappa, tau, c, dc, &mut tmp);
                for ((d, c), e) in dc.iter_mut().zip(c).zip(&system.detuning) {
                    *d = C64::new(0.0, -1.0) * (*d + c * e);
                }
            };
            solver.integrate(rhs, tau_start, tau_end, &mut c, |tau, c| track(tau, c))?;
            c
        }
        Frame::InteractionPicture => {
            let mut c = system.to_interaction(tau_start, &initial.amplitudes);
            let mut phase = vec![C64::new(0.0, 0.0); n];
            let mut v = vec![C64::new(0.0, 0.0); n];
            let rhs = |tau: f64, c: &[C64], dc: &mut [C64]| {
                for ((p, vi), (ci, e)) in phase.iter_mut().zip(v.iter_mut()).zip(c.iter().zip(&system.detuning)) {
                    *p = C64::from_polar(1.0, e * tau);
                    *vi = ci * p.conj();
                }
                system.apply_coupling(kappa, tau, &v, dc, &mut tmp);
                for (d, p) in dc.iter_mut().zip(&phase) {
                    *d = C64::new(0.0, -1.0) * p * *d;
                }
            };
            solver.integrate(rhs, tau_start, tau_end, &mut c, |tau, c| track(tau, &system.to_bare(tau, c)))?;
            system.to_bare(tau_end, &c)
        }
    };
    if let Some((tau, d)) = violation {
        return Err(PropagationError::IntegratorRejection { tau, drift: d, tolerance: config.norm_tol });
    }
    Ok(Propagation {
        final_state: AmplitudeVector { amplitudes: state, time: tau_end },
        half_window: tau_end.abs().max(tau_start.abs()),
        doublings: 0,
        window_change: 0.0,
        window_converged: true,
        norm_drift: drift,
        stats: solver.stats,
    })
}
