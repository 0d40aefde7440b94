//! Kinetic energy at which the fly-by depletes the initial state by a given
//! fraction.

use serde::Serialize;

use crate::coupling::KappaScale;

/// Most κ doublings tried when the descending branch ends above the target.
const MAX_EXTENSIONS: usize = 12;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum InversionError<E> {
    #[error("depletion {target} is unreachable: the scan maximum is {max_depletion} at kappa = {kappa_at_max}")]
    Unreachable { target: f64, max_depletion: f64, kappa_at_max: f64 },
    #[error("depletion stays above {target} up to kappa = {kappa}")]
    NoUpperBracket { target: f64, kappa: f64 },
    #[error("bracket [{lo}, {hi}] does not straddle depletion {target}")]
    Bracket { target: f64, lo: f64, hi: f64 },
    #[error("depletion scan is empty or non-increasing in kappa")]
    Scan,
    #[error(transparent)]
    Evaluation(E),
}

/// One root of 1 - P_ns(κ) = target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Root {
    pub kappa: f64,
    pub energy_ev: f64,
    /// Final bracket in κ.
    pub bracket: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Inversion {
    pub target: f64,
    /// Root on the descending branch above the depletion maximum.
    pub descending: Root,
    /// Root on the rising branch below the maximum, when the scan has one.
    pub ascending: Option<Root>,
    pub max_depletion: f64,
    pub kappa_at_max: f64,
    /// Depletion evaluations beyond the initial scan.
    pub evaluations: usize,
}

/// Finds κ > 0 with depletion(κ) = target.
///
/// `scan` holds (κ, depletion) for increasing κ > 0, usually computed in
/// parallel beforehand. Refinement bisects in κ until the energy bracket
/// (κ_hi/κ_lo)² - 1 is below `energy_rel_tol`; the reported κ interpolates
/// linearly inside the final bracket.
pub fn invert_for_depletion<E>(
    mut depletion: impl FnMut(f64) -> Result<f64, E>,
    scan: &[(f64, f64)],
    target: f64,
    energy_rel_tol: f64,
    scale: &KappaScale,
) -> Result<Inversion, InversionError<E>> {
    if scan.is_empty() || scan.windows(2).any(|w| !(w[1].0 > w[0].0)) || !(scan[0].0 > 0.0) {
        return Err(InversionError::Scan);
    }
    let (imax, &(kappa_at_max, max_depletion)) = scan
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("scan is nonempty");
    if !(target < max_depletion) {
        return Err(InversionError::Unreachable { target, max_depletion, kappa_at_max });
    }
    let mut evaluations = 0;
    let mut f = |k: f64| {
        evaluations += 1;
        depletion(k).map_err(InversionError::Evaluation)
    };

    let (lo, hi) = match scan[imax..].iter().position(|p| p.1 < target) {
        Some(j) => (scan[imax + j - 1], scan[imax + j]),
        None => {
            let mut lo = *scan.last().expect("scan is nonempty");
            let mut found = None;
            for _ in 0..MAX_EXTENSIONS {
                let k = 2.0 * lo.0;
                let p = (k, f(k)?);
                if p.1 < target {
                    found = Some(p);
                    break;
                }
                lo = p;
            }
            match found {
                Some(hi) => (lo, hi),
                None => return Err(InversionError::NoUpperBracket { target, kappa: lo.0 }),
            }
        }
    };
    let descending = refine(&mut f, lo, hi, target, energy_rel_tol, scale)?;

    let ascending = match scan[..imax].iter().rposition(|p| p.1 < target) {
        Some(j) => Some(refine(&mut f, scan[j], scan[j + 1], target, energy_rel_tol, scale)?),
        None => None,
    };
    Ok(Inversion { target, descending, ascending, max_depletion, kappa_at_max, evaluations })
}

fn refine<E>(
    f: &mut impl FnMut(f64) -> Result<f64, InversionError<E>>,
    mut a: (f64, f64),
    mut b: (f64, f64),
    target: f64,
    energy_rel_tol: f64,
    scale: &KappaScale,
) -> Result<Root, InversionError<E>> {
    if !((a.1 - target) * (b.1 - target) < 0.0) {
        return Err(InversionError::Bracket { target, lo: a.0, hi: b.0 });
    }
    while (b.0 / a.0).powi(2) - 1.0 > energy_rel_tol {
        let mid = 0.5 * (a.0 + b.0);
        let p = (mid, f(mid)?);
        if (p.1 - target) * (a.1 - target) > 0.0 {
            a = p;
        } else {
            b = p;
        }
    }
    let kappa = a.0 + (target - a.1) * (b.0 - a.0) / (b.1 - a.1);
    Ok(Root { kappa, energy_ev: scale.from_kappa(kappa).kinetic_energy_ev, bracket: (a.0, b.0) })
}
