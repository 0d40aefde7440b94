//! Internal-state dynamics of a trapped alkali Rydberg atom driven by a
//! guided electron passing at fixed distance.
//!
//! All internal quantities are in atomic units (a0, Hartree, ħ = 1).

pub mod atomic;
pub mod coupling;
pub mod manybody;
pub mod propagator;
pub mod scanner;
pub mod units;
pub mod weakfield;
