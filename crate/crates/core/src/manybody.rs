//! A chain of N atoms along the wire with nearest-neighbour resonant
//! dipole-dipole coupling in the single-excitation sector of one n' channel.
//!
//! Basis ordering: index 2j is |n'p+⟩ on site j, 2j + 1 is |n'p-⟩ on site j
//! (sites 0-based). The coupling between sites j and j + 1 is the 2×2 block
//! -μ²/(4R³) [[1, -3], [-3, 1]].

use serde::Serialize;

use crate::atomic::QuantumDefectModel;
use crate::coupling::{Channel, CouplingError};
use crate::weakfield::k0_k1;

/// Below this |sin(α/2)| the Dirichlet kernel is evaluated by its series.
const KERNEL_SERIES_THRESHOLD: f64 = 1e-6;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ManyBodyError {
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error("invalid chain: {0}")]
    Chain(String),
    #[error("invalid exciton label m = {m}, chi = {chi} for N = {atoms}")]
    Label { m: usize, chi: i32, atoms: usize },
    #[error("collective probabilities need kappa > 0, got {0}")]
    Kappa(f64),
}

/// N atoms at spacing R_at, all at distance D from the wire, coupled in the
/// |ns⟩ → |n'p⟩ channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChainConfig {
    pub atoms: usize,
    pub spacing: f64,
    pub distance: f64,
    pub channel: Channel,
}

impl ChainConfig {
    pub fn new(atoms: usize, spacing: f64, distance: f64, channel: Channel) -> Result<Self, ManyBodyError> {
        if atoms < 1 {
            return Err(ManyBodyError::Chain("need at least one atom".into()));
        }
        if !(spacing > 0.0 && spacing.is_finite()) || !(distance > 0.0 && distance.is_finite()) {
            return Err(ManyBodyError::Chain(format!(
                "spacing and distance must be positive, got {spacing}, {distance}"
            )));
        }
        Ok(Self { atoms, spacing, distance, channel })
    }

    pub fn from_model(
        model: &QuantumDefectModel,
        n: u32,
        n_prime: u32,
        atoms: usize,
        spacing: f64,
        distance: f64,
    ) -> Result<Self, ManyBodyError> {
        Self::new(atoms, spacing, distance, Channel::new(model, n, n_prime)?)
    }

    /// μ²/R_at³ in Hartree.
    pub fn dipole_coupling(&self) -> f64 {
        self.channel.dipole.powi(2) / self.spacing.powi(3)
    }

    /// μ²/R_at³ < 0.1 |Δ_{n'p}|.
    pub fn weak_dipole_valid(&self) -> bool {
        self.dipole_coupling() < 0.1 * self.channel.gap.abs()
    }

    pub fn eta(&self) -> f64 {
        self.channel.eta(self.distance)
    }

    pub fn lambda(&self) -> f64 {
        self.channel.lambda()
    }
}

/// Exciton |m, χ⟩ with m = 1..N and internal parity χ = ±1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ExcitonLabel {
    pub m: usize,
    pub chi: i32,
}

impl ExcitonLabel {
    pub fn new(m: usize, chi: i32, atoms: usize) -> Result<Self, ManyBodyError> {
        if m < 1 || m > atoms || (chi != 1 && chi != -1) {
            return Err(ManyBodyError::Label { m, chi, atoms });
        }
        Ok(Self { m, chi })
    }

    /// All 2N labels ordered by m, then χ = -1 before +1.
    pub fn all(atoms: usize) -> Vec<Self> {
        (1..=atoms).flat_map(|m| [-1, 1].map(|chi| Self { m, chi })).collect()
    }

    /// Column name such as `m2_chi-1`.
    pub fn column(&self) -> String {
        format!("m{}_chi{:+}", self.m, self.chi)
    }
}

/// Dense row-major 2N × 2N matrix of the nearest-neighbour dipole-dipole
/// operator (Hartree).
pub fn build_vdd_matrix(chain: &ChainConfig) -> Vec<f64> {
    let dim = 2 * chain.atoms;
    let mut v = vec![0.0; dim * dim];
    let c = -chain.dipole_coupling() / 4.0;
    let block = [[c, -3.0 * c], [-3.0 * c, c]];
    for site in 0..chain.atoms.saturating_sub(1) {
        for (a, row) in block.iter().enumerate() {
            for (b, &value) in row.iter().enumerate() {
                let (i, j) = (2 * site + a, 2 * (site + 1) + b);
                v[i * dim + j] = value;
                v[j * dim + i] = value;
            }
        }
    }
    v
}

/// Coefficients of |m, χ⟩ over the 2N single-excitation basis.
pub fn exciton_state(label: ExcitonLabel, atoms: usize) -> Result<Vec<f64>, ManyBodyError> {
    let label = ExcitonLabel::new(label.m, label.chi, atoms)?;
    let norm = (1.0 / (atoms as f64 + 1.0)).sqrt();
    let mut out = vec![0.0; 2 * atoms];
    for j in 0..atoms {
        let s = norm * site_phase(label.m, j + 1, atoms);
        out[2 * j] = s;
        out[2 * j + 1] = label.chi as f64 * s;
    }
    Ok(out)
}

/// sin(m j π/(N + 1)), with exact zeros where m j is a multiple of N + 1.
fn site_phase(m: usize, j: usize, atoms: usize) -> f64 {
    let period = 2 * (atoms + 1);
    let k = (m * j) % period;
    match k {
        0 => 0.0,
        _ if k == atoms + 1 => 0.0,
        _ => (k as f64 * std::f64::consts::PI / (atoms as f64 + 1.0)).sin(),
    }
}

/// ε_{mχ} = Δ_{n'p} - (1 - 3χ)(μ²/(2R³)) cos(mπ/(N + 1)).
pub fn exciton_energy(label: ExcitonLabel, chain: &ChainConfig) -> Result<f64, ManyBodyError> {
    let label = ExcitonLabel::new(label.m, label.chi, chain.atoms)?;
    let angle = label.m as f64 * std::f64::consts::PI / (chain.atoms as f64 + 1.0);
    Ok(chain.channel.gap - (1.0 - 3.0 * label.chi as f64) * 0.5 * chain.dipole_coupling() * angle.cos())
}

/// sin(Nα/2)/sin(α/2), continued through its removable singularities.
pub fn dirichlet_kernel(alpha: f64, atoms: usize) -> f64 {
    let n = atoms as f64;
    let half = 0.5 * alpha;
    let s = half.sin();
    if s.abs() >= KERNEL_SERIES_THRESHOLD {
        return (n * half).sin() / s;
    }
    // α = 2πk + ε: value (-1)^{k(N-1)} sin(Nε/2)/sin(ε/2)
    let k = (alpha / (2.0 * std::f64::consts::PI)).round();
    let x = 0.5 * (alpha - 2.0 * std::f64::consts::PI * k);
    let sign = if (k as i64 * (atoms as i64 - 1)).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let x2 = x * x;
    let series = n * (1.0 - (n * n - 1.0) * x2 / 6.0 + (3.0 * n.powi(4) - 10.0 * n * n + 7.0) * x2 * x2 / 360.0);
    sign * series
}

fn check_kappa(kappa: f64) -> Result<(), ManyBodyError> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(ManyBodyError::Kappa(kappa))
    }
}

/// κ⁻⁴ K0²(1/κ) and κ⁻⁴ K1²(1/κ).
fn bessel_weights(kappa: f64) -> (f64, f64) {
    if kappa < 1e-3 {
        return (0.0, 0.0);
    }
    let (a, b) = k0_k1(1.0 / kappa);
    let k4 = kappa.powi(4);
    (a * a / k4, b * b / k4)
}

/// Probability of exciting |m, χ⟩ from the all-|ns⟩ chain, for κ > 0.
pub fn collective_probability(
    label: ExcitonLabel,
    chain: &ChainConfig,
    kappa: f64,
    eta: f64,
    lambda: f64,
) -> Result<f64, ManyBodyError> {
    let label = ExcitonLabel::new(label.m, label.chi, chain.atoms)?;
    check_kappa(kappa)?;
    let n = chain.atoms;
    let base = label.m as f64 * std::f64::consts::PI / (n as f64 + 1.0);
    let shift = lambda * chain.spacing / (kappa * chain.distance);
    let parity = if label.m % 2 == 1 { 1.0 } else { -1.0 };
    let interference = dirichlet_kernel(base + shift, n) + parity * dirichlet_kernel(base - shift, n);
    let (w0, w1) = bessel_weights(kappa);
    let radial = if label.chi == -1 { w1 } else { w0 };
    Ok(4.0 * eta * eta / (n as f64 + 1.0) * radial * interference * interference)
}

/// Σ_{m,χ} P_{mχ} = 8Nη²κ⁻⁴[K0²(1/κ) + K1²(1/κ)].
pub fn total_collective_probability(chain: &ChainConfig, kappa: f64, eta: f64) -> Result<f64, ManyBodyError> {
    check_kappa(kappa)?;
    let (w0, w1) = bessel_weights(kappa);
    Ok(8.0 * chain.atoms as f64 * eta * eta * (w0 + w1))
}

/// Every P_{mχ} at one κ, in [`ExcitonLabel::all`] order.
pub fn collective_spectrum(
    chain: &ChainConfig,
    kappa: f64,
    eta: f64,
    lambda: f64,
) -> Result<Vec<(ExcitonLabel, f64)>, ManyBodyError> {
    ExcitonLabel::all(chain.atoms)
        .into_iter()
        .map(|l| Ok((l, collective_probability(l, chain, kappa, eta, lambda)?)))
        .collect()
}

/// Largest P_{mχ} over κ ∈ [lo, hi]: a log-spaced scan followed by
/// golden-section refinement around the best grid point. Returns (κ, P).
pub fn collective_peak(
    label: ExcitonLabel,
    chain: &ChainConfig,
    eta: f64,
    lambda: f64,
    lo: f64,
    hi: f64,
) -> Result<(f64, f64), ManyBodyError> {
    check_kappa(lo)?;
    check_kappa(hi)?;
    let points = 4000;
    let (a, b) = (lo.ln(), hi.ln());
    let f = |u: f64| collective_probability(label, chain, u.exp(), eta, lambda);
    let step = (b - a) / (points - 1) as f64;
    let mut best = (a, f(a)?);
    for i in 1..points {
        let u = a + step * i as f64;
        let p = f(u)?;
        if p > best.1 {
            best = (u, p);
        }
    }
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (mut l, mut h) = ((best.0 - step).max(a), (best.0 + step).min(b));
    let mut c = h - golden * (h - l);
    let mut d = l + golden * (h - l);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while h - l > 1e-12 {
        if fc > fd {
            h = d;
            d = c;
            fd = fc;
            c = h - golden * (h - l);
            fc = f(c)?;
        } else {
            l = c;
            c = d;
            fc = fd;
            d = l + golden * (h - l);
            fd = f(d)?;
        }
    }
    let u = 0.5 * (l + h);
    Ok((u.exp(), f(u)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weakfield::{analytic_probability, Target, WeakCouplingChannel};
    use nalgebra::{DMatrix, SymmetricEigen};

    fn chain(atoms: usize) -> ChainConfig {
        let channel = Channel { n: 55, n_prime: 55, dipole: 2531.8, gap: 3.3995e-6 };
        ChainConfig::new(atoms, 94_486.3, 47_243.15, channel).unwrap()
    }

    #[test]
    fn matrix_structure() {
        assert!(build_vdd_matrix(&chain(1)).iter().all(|v| *v == 0.0));
        let c = chain(2);
        let v = build_vdd_matrix(&c);
        let nonzero: Vec<(usize, usize)> =
            (0..16).filter(|k| v[*k] != 0.0).map(|k| (k / 4, k % 4)).collect();
        assert_eq!(nonzero.len(), 8);
        assert!(nonzero.iter().all(|(i, j)| (i / 2) != (j / 2)));
        // |p+⟩_1⟨p+|_2 element
        assert!((v[2] + c.dipole_coupling() / 4.0).abs() < 1e-15 * c.dipole_coupling());
        assert!((v[3] - 0.75 * c.dipole_coupling()).abs() < 1e-15 * c.dipole_coupling());
    }

    #[test]
    fn eigenvalues_match_dense_diagonalization() {
        for atoms in 1..=8 {
            let c = chain(atoms);
            let dim = 2 * atoms;
            let eig = SymmetricEigen::new(DMatrix::from_row_slice(dim, dim, &build_vdd_matrix(&c)));
            let mut dense: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            let mut formula: Vec<f64> = ExcitonLabel::all(atoms)
                .iter()
                .map(|l| exciton_energy(*l, &c).unwrap() - c.channel.gap)
                .collect();
            dense.sort_by(f64::total_cmp);
            formula.sort_by(f64::total_cmp);
            for (a, b) in dense.iter().zip(&formula) {
                assert!((a - b).abs() < 1e-12 * c.dipole_coupling(), "N = {atoms}");
            }
        }
    }

    #[test]
    fn excitons_are_orthonormal_eigenvectors() {
        for atoms in 1..=8 {
            let c = chain(atoms);
            let dim = 2 * atoms;
            let v = build_vdd_matrix(&c);
            let labels = ExcitonLabel::all(atoms);
            let states: Vec<Vec<f64>> = labels.iter().map(|l| exciton_state(*l, atoms).unwrap()).collect();
            for (a, sa) in states.iter().enumerate() {
                for (b, sb) in states.iter().enumerate() {
                    let dot: f64 = sa.iter().zip(sb).map(|(x, y)| x * y).sum();
                    assert!((dot - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
                let e = exciton_energy(labels[a], &c).unwrap() - c.channel.gap;
                for i in 0..dim {
                    let hv: f64 = (0..dim).map(|j| v[i * dim + j] * sa[j]).sum();
                    assert!((hv - e * sa[i]).abs() < 1e-12 * c.dipole_coupling());
                }
            }
        }
        assert_eq!(exciton_state(ExcitonLabel { m: 1, chi: 1 }, 1).unwrap(), vec![0.5f64.sqrt(), 0.5f64.sqrt()]);
        let mid = exciton_state(ExcitonLabel { m: 2, chi: -1 }, 3).unwrap();
        assert_eq!((mid[2], mid[3]), (0.0, 0.0));
    }

    #[test]
    fn energy_formula_signs() {
        let c = chain(4);
        let plus = exciton_energy(ExcitonLabel { m: 1, chi: 1 }, &c).unwrap() - c.channel.gap;
        let angle = std::f64::consts::PI / 5.0;
        assert!((plus - c.dipole_coupling() * angle.cos()).abs() < 1e-12 * c.dipole_coupling());
        for m in 1..=4 {
            for chi in [-1, 1] {
                let e = exciton_energy(ExcitonLabel { m, chi }, &c).unwrap() - c.channel.gap;
                let mirror = exciton_energy(ExcitonLabel { m: 5 - m, chi }, &c).unwrap() - c.channel.gap;
                assert!((e + mirror).abs() < 1e-12 * c.dipole_coupling());
            }
        }
        assert!(exciton_energy(ExcitonLabel { m: 5, chi: 1 }, &c).is_err());
        assert!(ExcitonLabel::new(1, 0, 4).is_err());
    }

    #[test]
    fn single_atom_reduces_to_weak_coupling_totals() {
        let c = chain(1);
        let eta = 0.18;
        for lambda in [1.0, -1.0] {
            for i in 0..40 {
                let kappa = 0.1 + 0.25 * i as f64;
                let sum: f64 = collective_spectrum(&c, kappa, eta, lambda).unwrap().iter().map(|(_, p)| p).sum();
                let single: f64 = [Target::PPlus, Target::PMinus]
                    .iter()
                    .map(|t| analytic_probability(&WeakCouplingChannel::new(eta, lambda, *t).unwrap(), kappa).probability)
                    .sum();
                assert!((sum - single).abs() < 1e-12 * single.max(1e-300), "{kappa}");
            }
        }
    }

    #[test]
    fn sum_rule() {
        let eta = 0.18;
        for atoms in 1..=8 {
            let c = chain(atoms);
            for i in 0..60 {
                let kappa = 0.2 + 4.8 * i as f64 / 59.0;
                let sum: f64 = collective_spectrum(&c, kappa, eta, 1.0).unwrap().iter().map(|(_, p)| p).sum();
                let total = total_collective_probability(&c, kappa, eta).unwrap();
                assert!((sum - total).abs() <= 1e-10 * total, "N = {atoms}, kappa = {kappa}");
            }
        }
    }

    /// Σ_j cos((j - (N - 1)/2) α), the kernel with no division.
    fn kernel_sum(alpha: f64, atoms: usize) -> f64 {
        let centre = 0.5 * (atoms as f64 - 1.0);
        (0..atoms).map(|j| ((j as f64 - centre) * alpha).cos()).sum()
    }

    #[test]
    fn kernel_is_continuous_at_removable_points() {
        for atoms in 1..=6 {
            for k in -3i32..=3 {
                let centre = 2.0 * std::f64::consts::PI * k as f64;
                for eps in [0.0, 1e-9, -1e-9, 1e-7, -3e-7, 1e-5, 1e-3] {
                    let a = centre + eps;
                    let got = dirichlet_kernel(a, atoms);
                    assert!((got - kernel_sum(a, atoms)).abs() < 1e-8, "N {atoms} alpha {a}");
                }
            }
        }
    }

    #[test]
    fn probability_is_continuous_through_kernel_poles() {
        let c = chain(3);
        let eta = 0.1;
        for m in 1..=3 {
            // α_m = 0 for λ = -1 at R/(κD) = mπ/(N+1)
            let kappa = c.spacing / c.distance / (m as f64 * std::f64::consts::PI / 4.0);
            for chi in [-1, 1] {
                let label = ExcitonLabel { m, chi };
                let at = collective_probability(label, &c, kappa, eta, -1.0).unwrap();
                let left = collective_probability(label, &c, kappa * (1.0 - 1e-9), eta, -1.0).unwrap();
                let right = collective_probability(label, &c, kappa * (1.0 + 1e-9), eta, -1.0).unwrap();
                assert!((left - at).abs() < 1e-8 && (right - at).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn negative_kappa_is_rejected() {
        let c = chain(2);
        let l = ExcitonLabel { m: 1, chi: 1 };
        assert!(matches!(collective_probability(l, &c, -0.5, 0.1, 1.0), Err(ManyBodyError::Kappa(_))));
        assert!(total_collective_probability(&c, 0.0, 0.1).is_err());
    }

    #[test]
    fn weak_dipole_flag() {
        let mut c = chain(2);
        assert!(c.weak_dipole_valid());
        c.spacing = 1000.0;
        assert!(!c.weak_dipole_valid());
    }

    #[test]
    fn column_labels() {
        let labels: Vec<String> = ExcitonLabel::all(2).iter().map(|l| l.column()).collect();
        assert_eq!(labels, ["m1_chi-1", "m1_chi+1", "m2_chi-1", "m2_chi+1"]);
    }
}
