//! Steady-state transport through chains of fiber-coupled atom-microcavity
//! subsystems.
//!
//! Each subsystem is a whispering-gallery resonator (two counterpropagating
//! modes with intermodal scattering) optionally coupled to a two-level atom.
//! Subsystems are solved individually in the weak-excitation limit
//! ([`resonator`]), cascaded with transfer matrices ([`chain`]) and
//! cross-checked against a direct solve of the fully coupled system
//! ([`oracle`]). [`analysis`] turns the spectra into supermode measures,
//! pathway decompositions and atom-configuration signatures.

pub mod analysis;
pub mod chain;
pub mod error;
pub mod model;
pub mod oracle;
pub mod resonator;

pub use analysis::{SupernessPoint, Thresholds};
pub use chain::{ChainResponse, TransferMatrix};
pub use error::{ModelError, SolveError};
pub use model::{
    uniform_chain, validate, AtomParams, CavityParams, ChainSpec, Drive, ScanGrid, SubsystemParams,
    ValidationReport,
};
pub use num_complex::Complex64;
pub use resonator::{ScatteringResponse, SteadyState};
