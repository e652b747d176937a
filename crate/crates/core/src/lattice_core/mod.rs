//! One-particle lattice Dirac machinery.
//!
//! Conventions: `hbar = c = 1`, `alpha = sigma_x`, `beta = sigma_z`, and the
//! spatial derivative is the exact spectral derivative on a periodic lattice.

mod conjugation;
mod current;
mod dirac;
mod lattice;
mod projectors;
pub mod spinor;

pub use conjugation::{charge_conjugate, ChargeConjugation};
pub use current::{continuity_residual, dirac_current, CurrentField};
pub use dirac::{build_dirac, free_spinors, plane_wave, DiracOperator};
pub use lattice::{Fourier, Lattice1D};
pub use projectors::{mode_projector, spectral_split, EnergyProjectors, GAP_THRESHOLD};
pub use spinor::SpinorField;
