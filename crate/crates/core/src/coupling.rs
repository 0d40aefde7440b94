//! Fly-by geometry, unit conversions, dimensionless couplings and the
//! time-dependent atom-electron interaction.
//!
//! The electron moves along X at distance D from the atom, R = (X, D, 0), and
//! couples through H_int = [(x + iy)(X - iD) + h.c.] / (2|R|³) = (xX + yD)/|R|³.
//! Dimensionless variables use the s-to-p gap Δ = E_{n'p} - E_{ns}:
//! κ = k / (D|Δ|), τ = t|Δ|, η = μ / (2D²|Δ|).

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::atomic::{
    angular_factor, energy, AtomicError, BasisSet, DipoleTable, QuantumDefectModel, RadialCache,
    RydbergState, SparseOperator,
};
use crate::units::{ev_to_hartree, hartree_to_ev, um_to_a0};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error(transparent)]
    Atomic(#[from] AtomicError),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("degenerate s-p gap for n = {n}, n' = {n_prime}")]
    DegenerateGap { n: u32, n_prime: u32 },
    #[error("kinetic energy must be positive, got {0} eV")]
    Domain(f64),
}

/// Wire-atom distance D, signed electron momentum k and packet width σ,
/// all in atomic units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlybyGeometry {
    pub distance: f64,
    pub momentum: f64,
    pub sigma: f64,
}

impl FlybyGeometry {
    pub fn new(distance: f64, momentum: f64, sigma: f64) -> Result<Self, CouplingError> {
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(CouplingError::Geometry(format!("D must be positive, got {distance}")));
        }
        if !(sigma >= 0.0) {
            return Err(CouplingError::Geometry(format!("sigma must be non-negative, got {sigma}")));
        }
        Ok(Self { distance, momentum, sigma })
    }

    pub fn from_micrometres(distance_um: f64, momentum: f64, sigma_um: f64) -> Result<Self, CouplingError> {
        Self::new(um_to_a0(distance_um), momentum, um_to_a0(sigma_um))
    }

    /// σ < D/10.
    pub fn point_charge_valid(&self) -> bool {
        self.sigma < self.distance / 10.0
    }
}

/// The |ns⟩ → |n'p⟩ channel: dipole μ_{nn'} = μ_{ns, n'p-} > 0 and gap
/// Δ_{n'p} = E_{n'p} - E_{ns} (Hartree).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Channel {
    pub n: u32,
    pub n_prime: u32,
    pub dipole: f64,
    pub gap: f64,
}

impl Channel {
    pub fn new(model: &QuantumDefectModel, n: u32, n_prime: u32) -> Result<Self, CouplingError> {
        let mut cache = RadialCache::new(model, crate::atomic::numerov::DEFAULT_STEP);
        Self::with_cache(model, &mut cache, n, n_prime)
    }

    pub(crate) fn with_cache(
        model: &QuantumDefectModel,
        cache: &mut RadialCache<'_>,
        n: u32,
        n_prime: u32,
    ) -> Result<Self, CouplingError> {
        let s = RydbergState::s(n)?;
        let p = RydbergState::new(n_prime, 1, -1)?;
        let gap = energy(p, model)? - energy(s, model)?;
        if gap == 0.0 {
            return Err(CouplingError::DegenerateGap { n, n_prime });
        }
        let radial = cache.radial_integral(n, 0, n_prime, 1)?;
        let dipole = (radial * angular_factor(0, 0, 1, -1)).abs();
        Ok(Self { n, n_prime, dipole, gap })
    }

    /// η_{nn'} = μ_{nn'} / (2 D² |Δ_{n'p}|).
    pub fn eta(&self, distance: f64) -> f64 {
        self.dipole / (2.0 * distance * distance * self.gap.abs())
    }

    /// λ_{nn'} = sign of Δ_{n'p}.
    pub fn lambda(&self) -> f64 {
        self.gap.signum()
    }

    /// Distance at which this channel reaches coupling `eta`.
    pub fn distance_for_eta(&self, eta: f64) -> f64 {
        (self.dipole / (2.0 * eta * self.gap.abs())).sqrt()
    }

    pub fn kappa_scale(&self, distance: f64) -> KappaScale {
        KappaScale { distance, gap: self.gap.abs() }
    }
}

/// η for the |ns⟩ → |n'p⟩ channel at distance `distance` (a0).
pub fn eta(n: u32, n_prime: u32, distance: f64, model: &QuantumDefectModel) -> Result<f64, CouplingError> {
    if !(distance > 0.0) {
        return Err(CouplingError::Geometry(format!("D must be positive, got {distance}")));
    }
    Ok(Channel::new(model, n, n_prime)?.eta(distance))
}

/// +1 when |n'p⟩ lies above |ns⟩, -1 below.
pub fn lambda_sign(n: u32, n_prime: u32, model: &QuantumDefectModel) -> Result<f64, CouplingError> {
    let gap = energy(RydbergState::new(n_prime, 1, 0)?, model)? - energy(RydbergState::s(n)?, model)?;
    if gap == 0.0 {
        return Err(CouplingError::DegenerateGap { n, n_prime });
    }
    Ok(gap.signum())
}

/// Dimensionless description of a fly-by in one channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DimensionlessParams {
    pub eta: f64,
    pub kappa: f64,
    pub lambda: f64,
    /// |Δ| in Hartree: τ = t · tau_scale.
    pub tau_scale: f64,
}

impl DimensionlessParams {
    pub fn new(channel: &Channel, geometry: &FlybyGeometry) -> Self {
        let scale = channel.kappa_scale(geometry.distance);
        Self {
            eta: channel.eta(geometry.distance),
            kappa: scale.kappa(geometry.momentum),
            lambda: channel.lambda(),
            tau_scale: channel.gap.abs(),
        }
    }
}

/// Converts between kinetic energy, momentum and κ for a given D and |Δ|.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KappaScale {
    pub distance: f64,
    pub gap: f64,
}

/// One electron velocity in three representations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Kinematics {
    pub kinetic_energy_ev: f64,
    pub momentum: f64,
    pub kappa: f64,
}

impl KappaScale {
    pub fn kappa(&self, momentum: f64) -> f64 {
        momentum / (self.distance * self.gap)
    }

    pub fn momentum(&self, kappa: f64) -> f64 {
        kappa * self.distance * self.gap
    }

    /// Electron moving in +X with the given kinetic energy.
    pub fn from_energy_ev(&self, energy_ev: f64) -> Result<Kinematics, CouplingError> {
        if !(energy_ev > 0.0) {
            return Err(CouplingError::Domain(energy_ev));
        }
        Ok(self.from_momentum((2.0 * ev_to_hartree(energy_ev)).sqrt()))
    }

    pub fn from_momentum(&self, momentum: f64) -> Kinematics {
        Kinematics {
            kinetic_energy_ev: hartree_to_ev(0.5 * momentum * momentum),
            momentum,
            kappa: self.kappa(momentum),
        }
    }

    pub fn from_kappa(&self, kappa: f64) -> Kinematics {
        self.from_momentum(self.momentum(kappa))
    }
}

/// Position operators x and y over a basis, the ingredients of H_int.
#[derive(Clone, Debug)]
pub struct InteractionOperator {
    pub x: SparseOperator,
    pub y: SparseOperator,
}

impl InteractionOperator {
    pub fn new(table: &DipoleTable) -> Self {
        Self { x: table.x_operator(), y: table.y_operator() }
    }

    /// Coefficients (a, b) with H_int = a x + b y at electron position X.
    pub fn weights(position: f64, distance: f64) -> (f64, f64) {
        let r2 = position * position + distance * distance;
        let inv_r3 = 1.0 / (r2 * r2.sqrt());
        (position * inv_r3, distance * inv_r3)
    }

    /// Dense H_int (Hartree), row-major.
    pub fn dense(&self, position: f64, distance: f64) -> Vec<C64> {
        let (a, b) = Self::weights(position, distance);
        let n = self.x.dim;
        let mut h = vec![C64::new(0.0, 0.0); n * n];
        for &(i, j, v) in &self.x.entries {
            h[i * n + j] += v * a;
        }
        for &(i, j, v) in &self.y.entries {
            h[i * n + j] += v * b;
        }
        h
    }
}

/// H_int(α, α') = [μ_{αα'}(X - iD) + conj(μ_{α'α})(X + iD)] / (2|R|³), dense
/// row-major over the basis.
pub fn interaction_matrix(basis: &BasisSet, table: &DipoleTable, position: f64, distance: f64) -> Vec<C64> {
    let n = basis.len();
    assert_eq!(n, table.dim(), "dipole table does not match basis");
    let r2 = position * position + distance * distance;
    let denom = 2.0 * r2 * r2.sqrt();
    let forward = C64::new(position, -distance) / denom;
    let backward = C64::new(position, distance) / denom;
    let mut h = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = table.get(i, j) * forward + table.get(j, i).conj() * backward;
        }
    }
    h
}

/// One validity condition of the point-charge fly-by model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub satisfied: bool,
    /// Ratio that must exceed 1 for the condition to hold.
    pub margin: f64,
}

impl Condition {
    fn from_margin(margin: f64) -> Self {
        Self { satisfied: margin > 1.0, margin }
    }
}

/// Ratio treated as "much greater than" by the diagnostics.
pub const MUCH_GREATER: f64 = 5.0;

/// Diagnostics of the approximations behind the point-charge dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValidityReport {
    /// Packet energy spread k/σ against the smallest level spacing from the
    /// initial state.
    pub no_back_action: Condition,
    /// σ < D/10.
    pub point_charge: Condition,
    /// κ ≫ η as a proxy for |∂_X f| ≪ |k f|.
    pub slowly_varying_envelope: Condition,
}

impl ValidityReport {
    pub fn all_satisfied(&self) -> bool {
        self.no_back_action.satisfied && self.point_charge.satisfied && self.slowly_varying_envelope.satisfied
    }
}

/// Checks the approximations for a geometry; never fails on violations.
pub fn validity_report(
    geometry: &FlybyGeometry,
    basis: &BasisSet,
    model: &QuantumDefectModel,
) -> Result<ValidityReport, CouplingError> {
    let e0 = basis.energies()[basis.initial_index()];
    let min_spacing = basis
        .energies()
        .iter()
        .map(|e| (e - e0).abs())
        .filter(|d| *d > 1e-15)
        .fold(f64::INFINITY, f64::min);
    let k = geometry.momentum.abs();
    let back_action = if geometry.sigma == 0.0 {
        f64::INFINITY
    } else {
        (k / geometry.sigma) / (MUCH_GREATER * min_spacing)
    };
    let point_charge = if geometry.sigma == 0.0 {
        f64::INFINITY
    } else {
        geometry.distance / (10.0 * geometry.sigma)
    };
    let n = basis.initial.n;
    let channel = Channel::new(model, n, n)?;
    let params = DimensionlessParams::new(&channel, geometry);
    let envelope = params.kappa.abs() / (MUCH_GREATER * params.eta);
    Ok(ValidityReport {
        no_back_action: Condition::from_margin(back_action),
        point_charge: Condition::from_margin(point_charge),
        slowly_varying_envelope: Condition::from_margin(envelope),
    })
}
