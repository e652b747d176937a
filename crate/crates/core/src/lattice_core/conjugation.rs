
use crate::lattice_core::spinor::{spin_apply, Spin2, ALPHA};
use crate::lattice_core::SpinorField;
use crate::linalg::CMatrix;

/// Antiunitary charge conjugation `C psi = U conj(psi)` with a fixed 2x2 unitary `U`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChargeConjugation {
    matrix: Spin2,
}

impl Default for ChargeConjugation {
    fn default() -> Self {
        Self { matrix: ALPHA }
    }
}

impl ChargeConjugation {
    /// Conjugation with an arbitrary spinor matrix; used for negative controls.
    pub fn with_matrix(matrix: Spin2) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &Spin2 {
        &self.matrix
    }

    pub fn apply(&self, field: &SpinorField) -> SpinorField {
        let amps = field
            .amplitudes()
            .iter()
            .map(|a| spin_apply(&self.matrix, [a[0].conj(), a[1].conj()]))
            .collect();
        SpinorField::new(*field.lattice(), amps).expect("finite")
    }

    /// Dense `C M C^{-1} = U conj(M) U^dag` for a site-spinor matrix `M`.
    pub fn conjugate_operator(&self, m: &CMatrix) -> CMatrix {
        let n = m.nrows();
        let mut u = CMatrix::zeros(n, n);
        for site in 0..n / 2 {
            for s in 0..2 {
                for t in 0..2 {
                    u[(2 * site + s, 2 * site + t)] = self.matrix[s][t];
                }
            }
        }
        &u * m.map(|c| c.conj()) * u.adjoint()
    }
}

/// Charge conjugation with the standard convention `U = alpha`.
pub fn charge_conjugate(field: &SpinorField) -> SpinorField {
    ChargeConjugation::default().apply(field)
}
