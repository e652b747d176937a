use crate::lattice_core::{DiracOperator, SpinorField};
use crate::error::{invalid, Result};

/// Dirac current `j0 = psi^dag psi`, `j1 = psi^dag alpha psi` per site.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentField {
    pub j0: Vec<f64>,
    pub j1: Vec<f64>,
}

pub fn dirac_current(field: &SpinorField) -> CurrentField {
    let (j0, j1) = field
        .amplitudes()
        .iter()
        .map(|a| {
            (
                a[0].norm_sqr() + a[1].norm_sqr(),
                2.0 * (a[0].conj() * a[1]).re,
            )
        })
        .unzip();
    CurrentField { j0, j1 }
}

/// Max-norm residual of `d_t j0 + d_x j1 = 0` across one step of length `dt`.
///
/// The time derivative is a central difference around `dt/2`, the space
/// derivative the spectral derivative of `j1` at the midpoint.
pub fn continuity_residual(op: &DiracOperator, field: &SpinorField, dt: f64) -> Result<f64> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid("continuity step must be positive"));
    }
    let start = dirac_current(field).j0;
    let mid = dirac_current(&op.evolve(field, 0.5 * dt)?).j1;
    let end = dirac_current(&op.evolve(field, dt)?).j0;
    let div = op.fourier().derivative(op.lattice(), &mid);
    Ok(start
        .iter()
        .zip(&end)
        .zip(&div)
        .map(|((a, b), d)| ((b - a) / dt + d).abs())
        .fold(0.0, f64::max))
}
