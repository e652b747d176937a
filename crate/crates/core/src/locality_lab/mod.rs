//! Localization defects of energy-projected packets, light-cone leakage of
//! the lattice evolution and the off-diagonal Hilbert-Schmidt norm.

mod hilbert_schmidt;
mod localization;

pub use hilbert_schmidt::{hs_norm_offdiag, hs_norm_offdiag_dense, hs_scan, HsScanRow, PotentialFamily};
pub use localization::{
    leakage_refinement, lightcone_leakage, localization_defect, outside_mass, smooth_box, superluminal_tail_demo,
    LeakageSetup, LocalityReport, RegionMask, TailReport,
};
