use std::io::Write;

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::AmplitudeVector;
use crate::atomic::{BasisSet, DipoleTable, RydbergState};

/// Final-state populations with the orbital aggregates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PopulationSummary {
    pub per_state: Vec<(RydbergState, f64)>,
    /// The initial |ns⟩ level.
    pub initial_s: f64,
    /// s levels other than the initial one.
    pub other_s: f64,
    pub p: f64,
    pub d: f64,
    /// l > 2.
    pub higher: f64,
}

impl PopulationSummary {
    pub fn total(&self) -> f64 {
        self.initial_s + self.other_s + self.p + self.d + self.higher
    }

    /// Summed population of the states matching `filter`.
    pub fn sum_where(&self, filter: impl Fn(&RydbergState) -> bool) -> f64 {
        self.per_state.iter().filter(|(s, _)| filter(s)).map(|(_, p)| p).sum()
    }
}

pub fn populations(state: &AmplitudeVector, basis: &BasisSet) -> PopulationSummary {
    assert_eq!(state.amplitudes.len(), basis.len(), "state does not match basis");
    let mut out = PopulationSummary {
        per_state: Vec::with_capacity(basis.len()),
        initial_s: 0.0,
        other_s: 0.0,
        p: 0.0,
        d: 0.0,
        higher: 0.0,
    };
    for (s, c) in basis.states().iter().zip(&state.amplitudes) {
        let p = c.norm_sqr();
        out.per_state.push((*s, p));
        match s.l {
            0 if *s == basis.initial => out.initial_s += p,
            0 => out.other_s += p,
            1 => out.p += p,
            2 => out.d += p,
            _ => out.higher += p,
        }
    }
    out
}

/// Induced dipole (⟨x⟩, ⟨y⟩, ⟨z⟩) in a0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Polarization {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Expectation values of the position operators, with x and y assembled
/// from the x ± iy table and z from the same radial integrals.
pub fn polarization(state: &AmplitudeVector, table: &DipoleTable) -> Polarization {
    let c = &state.amplitudes;
    assert_eq!(c.len(), table.dim(), "state does not match dipole table");
    // ⟨x + iy⟩ = ⟨x⟩ + i⟨y⟩ since x and y are Hermitian
    let plus: C64 = table.nonzeros().map(|(i, j, mu)| c[i].conj() * mu * c[j]).sum();
    let z = table.z_operator().expectation(c);
    Polarization { x: plus.re, y: plus.im, z: z.re }
}

/// One sample of a trajectory dump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub tau: f64,
    pub initial_s: f64,
    pub p: f64,
    pub d: f64,
    pub higher: f64,
    pub x: f64,
    pub y: f64,
    pub norm: f64,
}

impl TrajectoryPoint {
    pub fn new(tau: f64, amplitudes: &[C64], basis: &BasisSet, table: &DipoleTable) -> Self {
        let state = AmplitudeVector { amplitudes: amplitudes.to_vec(), time: tau };
        let pops = populations(&state, basis);
        let pol = polarization(&state, table);
        Self {
            tau,
            initial_s: pops.initial_s,
            p: pops.p,
            d: pops.d,
            higher: pops.higher,
            x: pol.x,
            y: pol.y,
            norm: state.norm_sqr(),
        }
    }
}

pub fn write_trajectory_csv<W: Write>(points: &[TrajectoryPoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "tau,p_ns,p_p,p_d,p_gt_d,x,y,norm")?;
    for t in points {
        writeln!(
            out,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            t.tau, t.initial_s, t.p, t.d, t.higher, t.x, t.y, t.norm
        )?;
    }
    Ok(())
}
