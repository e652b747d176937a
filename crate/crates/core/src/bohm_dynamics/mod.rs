//! Trajectories guided by the Dirac current, stochastic pair jumps and the
//! double-slit build-up.

mod double_slit;
mod guidance;
mod integrate;
mod jumps;
mod sampling;

pub use double_slit::{
    born_bins, born_peaks, cell_histogram, double_slit_experiment, is_unimodal, match_fringes, DoubleSlitOutcome,
    DoubleSlitParams, FringeReport,
};
pub use guidance::{cubic_stencil, slot_currents, velocity, Configuration, Guidance, VelocityField, ZeroVelocity, NODE_DENSITY};
pub use integrate::{integrate, run_ensemble, EnsembleRun, Trajectory};
pub use jumps::{bell_jump_simulate, pair_coupling_count, pair_toy, ClassLabel, JumpEvent, JumpModel, JumpRun, JumpStatistics};
pub use sampling::{born_marginal, cell_cdf, equivariance_ks, sample_initial};
