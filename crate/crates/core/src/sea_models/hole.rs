use num_complex::Complex64;

use crate::sea_models::{FockBasis, FockOperator};

/// Particle-hole transform on the negative band, `W = i^{r(r-1)/2} prod_neg (a_k + a_k^dag)`.
///
/// `W` is a signed permutation of the occupation basis: it flips every
/// negative-mode bit. The phase makes it an involution.
#[derive(Clone, Debug, PartialEq)]
pub struct HoleMap {
    target: Vec<usize>,
    phase: Vec<Complex64>,
}

pub fn hole_map(basis: &FockBasis) -> HoleMap {
    let r = basis.negative_modes();
    let global = Complex64::i().powu((r * r.saturating_sub(1) / 2) as u32);
    let dim = basis.dim();
    let mut target = Vec::with_capacity(dim);
    let mut phase = Vec::with_capacity(dim);
    for b in 0..dim {
        let mut bits = b;
        let mut sign = 1.0;
        // the product acts rightmost factor first
        for k in (0..r).rev() {
            if (bits & ((1 << k) - 1)).count_ones() % 2 == 1 {
                sign = -sign;
            }
            bits ^= 1 << k;
        }
        target.push(bits);
        phase.push(global * sign);
    }
    HoleMap { target, phase }
}

impl HoleMap {
    pub fn dim(&self) -> usize {
        self.target.len()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (b, c) in v.iter().enumerate() {
            out[self.target[b]] += self.phase[b] * c;
        }
        out
    }

    pub fn apply_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for b in 0..self.dim() {
            out[b] = self.phase[b].conj() * v[self.target[b]];
        }
        out
    }

    pub fn operator(&self) -> FockOperator {
        FockOperator::from_entries(self.dim(), (0..self.dim()).map(|b| (self.target[b], b, self.phase[b])))
    }

    /// `W^dag A W`.
    pub fn conjugate(&self, op: &FockOperator) -> FockOperator {
        let w = self.operator();
        w.adjoint().matmul(&op.matmul(&w))
    }
}
