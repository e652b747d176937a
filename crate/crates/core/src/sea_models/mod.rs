//! Second-quantized Dirac field on a handful of sites: cell charges, signed
//! configurations, the hole map and the conjugated-motion check.

mod charge;
mod fock;
mod hole;
mod motion;

pub use charge::{
    charge_operator, charge_operator_empty, contiguous_cells, joint_spectral_weights, sample_signed_config, total_charge,
    variance, SignedConfiguration, SignedSampler,
};
pub use fock::{apply_ladder, build_fock, FockBasis, FockOperator, SeaConvention, DENSE_FOCK_LIMIT, MAX_FOCK_SITES};
pub use hole::{hole_map, HoleMap};
pub use motion::{positron_motion_check, positron_motion_check_with, step_potential, MotionReport};
