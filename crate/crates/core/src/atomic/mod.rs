//! Quantum-defect atomic structure: level energies, radial functions,
//! transition dipoles and truncated bases.

mod angular;
mod basis;
mod defects;
mod dipole;
pub mod numerov;

pub use angular::{angular_factor, angular_factor_z};
pub use basis::BasisSet;
pub use defects::{energy, QuantumDefectModel, RydbergState};
pub use dipole::{radial_dipole_integral, DipoleTable, RadialCache, SparseOperator};
pub use numerov::{radial_wavefunction, RadialMesh, RadialWavefunction};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AtomicError {
    #[error("invalid quantum-defect model: {0}")]
    InvalidModel(String),
    #[error("invalid state n = {n}, l = {l}, m = {m}")]
    InvalidState { n: u32, l: u32, m: i32 },
    #[error("radial mesh too coarse: {0}")]
    Resolution(String),
    #[error("dipole radial integral needs |l1 - l2| = 1, got l1 = {l1}, l2 = {l2}")]
    SelectionRule { l1: u32, l2: u32 },
    #[error("basis configuration: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Labeled {
        context: String,
        #[source]
        source: Box<AtomicError>,
    },
}

impl AtomicError {
    fn for_level(self, n: u32, l: u32) -> Self {
        Self::Labeled { context: format!("level n = {n}, l = {l}"), source: Box::new(self) }
    }

    fn between(self, a: RydbergState, b: RydbergState) -> Self {
        Self::Labeled { context: format!("dipole {a} <-> {b}"), source: Box::new(self) }
    }
}
