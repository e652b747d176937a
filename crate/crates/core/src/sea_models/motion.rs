use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice_core::{spectral_split, ChargeConjugation, DiracOperator, SpinorField};

/// Outcome of comparing a negative-energy packet with its conjugate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionReport {
    /// `|| C(evolved) - evolved'(C psi) ||`, the primed evolution with opposite charge.
    pub deviation: f64,
    /// Positive-energy weight of the packet under the free operator.
    pub positive_fraction: f64,
}

/// Checks that a negative-energy packet moves like its conjugate with opposite charge.
///
/// `psi` evolves under `op` (charge `e`), `C psi` under the same potential with
/// charge `-e`. Since `C H(e) C^{-1} = -H(-e)` the two agree exactly for the
/// standard conjugation.
pub fn positron_motion_check(op: &DiracOperator, packet: &SpinorField, t: f64) -> Result<MotionReport> {
    positron_motion_check_with(&ChargeConjugation::default(), op, packet, t)
}

/// As [`positron_motion_check`] with an arbitrary conjugation, for negative controls.
pub fn positron_motion_check_with(conj: &ChargeConjugation, op: &DiracOperator, packet: &SpinorField, t: f64) -> Result<MotionReport> {
    let positive_fraction = spectral_split(&op.free_part())?.positive_fraction(packet);
    if positive_fraction > 1e-10 {
        log::warn!("packet is not purely negative-energy (positive fraction {positive_fraction:e})");
    }
    let evolved = op.evolve(packet, t)?;
    let flipped = op.with_charge(-op.charge())?;
    let mirrored = flipped.evolve(&conj.apply(packet), t)?;
    Ok(MotionReport {
        deviation: conj.apply(&evolved).sub(&mirrored).norm(),
        positive_fraction,
    })
}

/// Step potential `height` on the right half of the lattice.
pub fn step_potential(sites: usize, height: f64) -> Vec<f64> {
    (0..sites).map(|i| if i >= sites / 2 { height } else { 0.0 }).collect()
}
