use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice_core::{DiracOperator, SpinorField};
use crate::linalg::CMatrix;

/// Eigenvalues closer to zero than this make the energy split ill-defined.
pub const GAP_THRESHOLD: f64 = 1e-12;

/// Spectral projectors onto the positive and negative energy subspaces.
#[derive(Clone, Debug)]
pub struct EnergyProjectors {
    op: DiracOperator,
    repr: Repr,
}

#[derive(Clone, Debug)]
enum Repr {
    /// Uniform potential: per-mode 2x2 projectors applied through the FFT.
    Momentum { shift: f64 },
    Dense { p_plus: CMatrix },
}

/// Splits the spectrum of `op` into positive and negative energies.
pub fn spectral_split(op: &DiracOperator) -> Result<EnergyProjectors> {
    if let Some(shift) = op.uniform_shift() {
        let min_abs = op
            .lattice()
            .momenta()
            .into_iter()
            .flat_map(|p| {
                let e = op.mass().hypot(p);
                [(e + shift).abs(), (shift - e).abs()]
            })
            .fold(f64::INFINITY, f64::min);
        if min_abs < GAP_THRESHOLD {
            return Err(Error::Gapless { min_abs });
        }
        return Ok(EnergyProjectors {
            op: op.clone(),
            repr: Repr::Momentum { shift },
        });
    }
    let eig = op.eigensystem();
    let min_abs = eig.values.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
    if min_abs < GAP_THRESHOLD {
        return Err(Error::Gapless { min_abs });
    }
    Ok(EnergyProjectors {
        op: op.clone(),
        repr: Repr::Dense {
            p_plus: eig.projector(|e| e > 0.0),
        },
    })
}

impl EnergyProjectors {
    pub fn operator(&self) -> &DiracOperator {
        &self.op
    }

    pub fn apply_plus(&self, field: &SpinorField) -> SpinorField {
        match &self.repr {
            Repr::Momentum { shift } => self.apply_momentum(field, *shift, true),
            Repr::Dense { p_plus } => {
                let v = p_plus * crate::linalg::CVector::from_vec(field.to_flat());
                SpinorField::from_flat(*field.lattice(), v.as_slice()).expect("finite")
            }
        }
    }

    pub fn apply_minus(&self, field: &SpinorField) -> SpinorField {
        match &self.repr {
            Repr::Momentum { shift } => self.apply_momentum(field, *shift, false),
            Repr::Dense { .. } => field.sub(&self.apply_plus(field)),
        }
    }

    fn apply_momentum(&self, field: &SpinorField, shift: f64, positive: bool) -> SpinorField {
        let lattice = *self.op.lattice();
        let l = lattice.num_sites();
        let fourier = self.op.fourier();
        let mass = self.op.mass();
        let mut up: Vec<Complex64> = field.amplitudes().iter().map(|a| a[0]).collect();
        let mut down: Vec<Complex64> = field.amplitudes().iter().map(|a| a[1]).collect();
        fourier.forward(&mut up);
        fourier.forward(&mut down);
        for (k, p) in lattice.momenta().into_iter().enumerate() {
            let (u, d) = (up[k], down[k]);
            let [[a, b], [c, dd]] = mode_projector(mass, p, shift, positive);
            up[k] = u * a + d * b;
            down[k] = u * c + d * dd;
        }
        fourier.inverse(&mut up);
        fourier.inverse(&mut down);
        SpinorField::new(lattice, (0..l).map(|i| [up[i], down[i]]).collect()).expect("finite")
    }

    /// Dense matrix of `P_+`.
    pub fn dense_plus(&self) -> CMatrix {
        match &self.repr {
            Repr::Dense { p_plus } => p_plus.clone(),
            Repr::Momentum { .. } => {
                let n = 2 * self.op.lattice().num_sites();
                crate::linalg::dense_from_apply(n, |v| {
                    let f = SpinorField::from_flat(*self.op.lattice(), v).expect("finite");
                    self.apply_plus(&f).to_flat()
                })
            }
        }
    }

    pub fn dense_minus(&self) -> CMatrix {
        let n = 2 * self.op.lattice().num_sites();
        CMatrix::identity(n, n) - self.dense_plus()
    }

    /// Fraction of the norm of `field` in the positive-energy subspace.
    pub fn positive_fraction(&self, field: &SpinorField) -> f64 {
        let total = field.norm_sq();
        if total == 0.0 {
            return 0.0;
        }
        self.apply_plus(field).norm_sq() / total
    }
}

/// Real 2x2 projector onto the selected band of mode `p`, accounting for a uniform shift.
pub fn mode_projector(mass: f64, p: f64, shift: f64, positive: bool) -> [[f64; 2]; 2] {
    let e = mass.hypot(p);
    let upper_positive = e + shift > 0.0;
    let lower_positive = shift - e > 0.0;
    let upper = if e > 0.0 {
        [
            [0.5 * (1.0 + mass / e), 0.5 * p / e],
            [0.5 * p / e, 0.5 * (1.0 - mass / e)],
        ]
    } else {
        [[1.0, 0.0], [0.0, 0.0]]
    };
    let lower = [
        [1.0 - upper[0][0], -upper[0][1]],
        [-upper[1][0], 1.0 - upper[1][1]],
    ];
    let mut out = [[0.0; 2]; 2];
    for (take, band) in [(upper_positive == positive, upper), (lower_positive == positive, lower)] {
        if take {
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] += band[i][j];
                }
            }
        }
    }
    out
}
