//! CODATA 2018 conversion factors to atomic units.

/// Bohr radius in metres.
pub const BOHR_RADIUS_M: f64 = 5.291_772_109_03e-11;

/// Hartree energy in electron volts.
pub const HARTREE_EV: f64 = 27.211_386_245_988;

/// Bohr radii per micrometre.
pub const A0_PER_UM: f64 = 1e-6 / BOHR_RADIUS_M;

pub fn um_to_a0(um: f64) -> f64 {
    um * A0_PER_UM
}

pub fn a0_to_um(a0: f64) -> f64 {
    a0 / A0_PER_UM
}

pub fn ev_to_hartree(ev: f64) -> f64 {
    ev / HARTREE_EV
}

pub fn hartree_to_ev(ha: f64) -> f64 {
    ha * HARTREE_EV
}
