//! Radial Coulomb functions with non-integer effective quantum number.
//!
//! The radial equation u'' = [l(l+1)/r² - 2/r + 1/n*²] u is integrated inward
//! on the mesh x = √r, where it becomes w'' = k(x) w with u = √x w and
//! k(x) = (4l(l+1) + 3/4)/x² - 8 + 4x²/n*². On this mesh the local wavelength
//! is nearly constant, so a uniform step in x resolves every lobe equally.

use super::AtomicError;

/// Default step in x = √r (units of a0^{1/2}).
pub const DEFAULT_STEP: f64 = 0.005;

/// Smallest inner cutoff radius, used for s states whose classical inner
/// turning point is at the origin.
const R_FLOOR: f64 = 1e-3;

/// Relative change of the norm between the full and the every-other-point
/// quadrature above which the mesh is declared too coarse.
const NORM_CONVERGENCE: f64 = 1e-6;

/// Uniform mesh in x = √r. Nodes sit at integer multiples of `step`, so two
/// functions built with the same step share nodes on their overlap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialMesh {
    pub step: f64,
    pub r_in: f64,
    pub r_out: f64,
}

impl RadialMesh {
    /// Mesh from half the inner classical turning point out to 2 n*(n* + 15).
    pub fn for_level(n_eff: f64, l: u32, step: f64) -> Self {
        let ll = (l * (l + 1)) as f64;
        let disc = (1.0 - ll / (n_eff * n_eff)).max(0.0);
        let r_turn_inner = n_eff * n_eff * (1.0 - disc.sqrt());
        Self {
            step,
            r_in: (0.5 * r_turn_inner).max(R_FLOOR),
            r_out: outer_radius(n_eff),
        }
    }

    fn index_range(&self) -> (usize, usize) {
        let first = (self.r_in.sqrt() / self.step).ceil().max(1.0) as usize;
        let last = (self.r_out.sqrt() / self.step).floor() as usize;
        (first, last)
    }
}

/// Required outer edge of the mesh for a level with effective number `n_eff`.
pub fn outer_radius(n_eff: f64) -> f64 {
    2.0 * n_eff * (n_eff + 15.0)
}

/// Normalized radial function sampled as w(x) on the √r mesh.
#[derive(Clone, Debug)]
pub struct RadialWavefunction {
    pub n_eff: f64,
    pub l: u32,
    step: f64,
    first: usize,
    w: Vec<f64>,
}

impl RadialWavefunction {
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Sample points (r, u(r)) with u = r R(r).
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.w.iter().enumerate().map(move |(j, &w)| {
            let x = (self.first + j) as f64 * self.step;
            (x * x, w * x.sqrt())
        })
    }

    /// ∫ u² dr, which is 1 after construction.
    pub fn norm(&self) -> f64 {
        2.0 * trapezoid(self.step, self.first, &self.w, |x, w| x * x * w * w)
    }

    /// Number of sign changes of u on the mesh.
    pub fn node_count(&self) -> usize {
        let peak = self.w.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let significant: Vec<f64> =
            self.w.iter().copied().filter(|w| w.abs() > 1e-9 * peak).collect();
        significant.windows(2).filter(|p| p[0] * p[1] < 0.0).count()
    }
}

fn trapezoid(step: f64, first: usize, w: &[f64], f: impl Fn(f64, f64) -> f64) -> f64 {
    let n = w.len();
    let mut acc = 0.0;
    for (j, &wj) in w.iter().enumerate() {
        let x = (first + j) as f64 * step;
        let weight = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
        acc += weight * f(x, wj);
    }
    acc * step
}

/// Integrates inward from the outer edge of `mesh` and normalizes.
///
/// The start is positive, so the outermost lobe of u is positive.
pub fn radial_wavefunction(
    n_eff: f64,
    l: u32,
    mesh: &RadialMesh,
) -> Result<RadialWavefunction, AtomicError> {
    if !(n_eff > 0.0) {
        return Err(AtomicError::InvalidModel(format!("effective quantum number {n_eff} <= 0")));
    }
    if mesh.r_out < outer_radius(n_eff) * (1.0 - 1e-12) {
        return Err(AtomicError::Resolution(format!(
            "mesh ends at r = {} a0, below 2 n*(n* + 15) = {} a0",
            mesh.r_out,
            outer_radius(n_eff)
        )));
    }
    let (first, last) = mesh.index_range();
    if last < first + 8 {
        return Err(AtomicError::Resolution(format!(
            "mesh step {} leaves fewer than 8 nodes",
            mesh.step
        )));
    }
    let h = mesh.step;
    let h2 = h * h / 12.0;
    let centrifugal = 4.0 * (l * (l + 1)) as f64 + 0.75;
    let inv_n2 = 1.0 / (n_eff * n_eff);
    let k = |i: usize| {
        let x = i as f64 * h;
        let x2 = x * x;
        centrifugal / x2 - 8.0 + 4.0 * x2 * inv_n2
    };

    // Outer-to-inner samples. Below the nominal cutoff the integration goes on
    // while |u| keeps shrinking, so regular (integer n*) solutions are not
    // truncated; it stops where the irregular solution takes over.
    let stable_floor = (1..first).find(|&i| h2 * k(i) < 0.5).unwrap_or(first);
    let u_mag = |i: usize, w: f64| w.abs() * (i as f64 * h).sqrt();
    let mut rev = Vec::with_capacity(last - first + 1);
    rev.push(1e-30);
    rev.push(2e-30);
    let mut i = last - 1;
    let (mut k_next, mut k_here) = (k(last), k(last - 1));
    while i > stable_floor {
        let k_prev = k(i - 1);
        let denom = 1.0 - h2 * k_prev;
        if denom <= 0.0 {
            return Err(AtomicError::Resolution(format!(
                "Numerov step {h} unstable at r = {} a0",
                ((i - 1) as f64 * h).powi(2)
            )));
        }
        let j = rev.len() - 1;
        let next = (2.0 * (1.0 + 5.0 * h2 * k_here) * rev[j] - (1.0 - h2 * k_next) * rev[j - 1]) / denom;
        if i <= first && (next * rev[j] <= 0.0 || u_mag(i - 1, next) >= u_mag(i, rev[j])) {
            break;
        }
        rev.push(next);
        if next.abs() > 1e200 {
            rev.iter_mut().for_each(|v| *v *= 1e-200);
        }
        k_next = k_here;
        k_here = k_prev;
        i -= 1;
    }
    let first = i;
    rev.reverse();
    let mut w = rev;

    let fine = 2.0 * trapezoid(h, first, &w, |x, w| x * x * w * w);
    // same integral on every other node
    let coarse_nodes: Vec<f64> = w
        .iter()
        .enumerate()
        .step_by(2)
        .map(|(j, &wj)| {
            let x = (first + j) as f64 * h;
            x * x * wj * wj
        })
        .collect();
    let coarse = 4.0 * h * trapezoid(1.0, 0, &coarse_nodes, |_, f| f);
    if !(fine.is_finite() && fine > 0.0) || ((fine - coarse) / fine).abs() > NORM_CONVERGENCE {
        return Err(AtomicError::Resolution(format!(
            "norm of n* = {n_eff}, l = {l} not converged at step {h} ({fine} vs {coarse})"
        )));
    }
    let scale = 1.0 / fine.sqrt();
    w.iter_mut().for_each(|v| *v *= scale);
    Ok(RadialWavefunction { n_eff, l, step: h, first, w })
}

/// ∫ u_a(r) r u_b(r) dr over the common support of the two functions.
pub fn radial_overlap_r(a: &RadialWavefunction, b: &RadialWavefunction) -> f64 {
    assert!(
        (a.step - b.step).abs() <= 1e-15 * a.step,
        "radial functions must share the mesh step"
    );
    let lo = a.first.max(b.first);
    let hi = (a.first + a.w.len()).min(b.first + b.w.len());
    if hi <= lo + 1 {
        return 0.0;
    }
    let wa = &a.w[lo - a.first..hi - a.first];
    let wb = &b.w[lo - b.first..hi - b.first];
    let prod: Vec<f64> = wa.iter().zip(wb).map(|(x, y)| x * y).collect();
    2.0 * trapezoid(a.step, lo, &prod, |x, p| x.powi(4) * p)
}
